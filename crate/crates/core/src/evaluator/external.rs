use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::{EvalError, Evaluator, LatticeResponse};
use crate::lattice::SolutionVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalConfig {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    pub timeout_secs: f64,
    /// Upper bound on concurrently running evaluator processes.
    pub max_concurrent: usize,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        Self {
            command: Vec::new(),
            timeout_secs: 300.0,
            max_concurrent: 1,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    enr: &'a [f64],
    gad: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    kinf: f64,
    ppf: f64,
}

/// Request line written to the evaluator's stdin, newline included.
pub fn request_line(sol: &SolutionVector) -> String {
    let req = Request {
        enr: sol.enr(),
        gad: sol.gad(),
    };
    let mut line = serde_json::to_string(&req).expect("plain numbers serialize");
    line.push('\n');
    line
}

/// Parse the first non-empty stdout line as `{"kinf": x, "ppf": y}`.
pub fn parse_response_line(stdout: &str) -> Result<LatticeResponse, EvalError> {
    let line = stdout
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| EvalError::ProtocolError("empty output".into()))?;
    let resp: Response = serde_json::from_str(line)
        .map_err(|e| EvalError::ProtocolError(format!("{e}: {line:?}")))?;
    if !resp.kinf.is_finite() || !resp.ppf.is_finite() {
        return Err(EvalError::ProtocolError(format!("non-finite values: {line:?}")));
    }
    Ok(LatticeResponse {
        kinf: resp.kinf,
        ppf: resp.ppf,
    })
}

/// Counting semaphore bounding live child processes.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Runs an external lattice code once per evaluation.
#[derive(Debug)]
pub struct ExternalEvaluator {
    cfg: ExternalConfig,
    slots: Slots,
}

impl ExternalEvaluator {
    pub fn new(cfg: ExternalConfig) -> Result<Self, EvalError> {
        if cfg.command.is_empty() {
            return Err(EvalError::InvalidConfig("empty evaluator command".into()));
        }
        if !cfg.timeout_secs.is_finite() || cfg.timeout_secs <= 0.0 {
            return Err(EvalError::InvalidConfig("timeout must be positive".into()));
        }
        let slots = Slots {
            free: Mutex::new(cfg.max_concurrent.max(1)),
            cv: Condvar::new(),
        };
        Ok(Self { cfg, slots })
    }

    fn run(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        let _slot = self.slots.acquire();
        let program = &self.cfg.command[0];
        let mut child = Command::new(program)
            .args(&self.cfg.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| EvalError::SpawnFailed {
                program: program.clone(),
                source,
            })?;

        let mut stdin = child.stdin.take().expect("stdin piped");
        let request = request_line(sol);
        // A child that exits without reading its input is judged by its
        // status and output below, so a broken pipe here is not fatal.
        let _ = stdin.write_all(request.as_bytes());
        drop(stdin);

        let stdout = drain(child.stdout.take().expect("stdout piped"));
        let stderr = drain(child.stderr.take().expect("stderr piped"));

        let timeout = Duration::from_secs_f64(self.cfg.timeout_secs);
        let status = match child.wait_timeout(timeout)? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                // Readers may stay blocked on grandchildren holding the pipes;
                // they are detached rather than joined.
                return Err(EvalError::Timeout(self.cfg.timeout_secs));
            }
        };
        let stdout = stdout.join().unwrap_or_default();
        let stderr = stderr.join().unwrap_or_default();
        if !status.success() {
            return Err(EvalError::EvaluatorReportedError {
                status: status.to_string(),
                stderr: stderr.trim().to_string(),
            });
        }
        parse_response_line(&stdout)
    }
}

fn drain<R: Read + Send + 'static>(mut pipe: R) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&self, sol: &SolutionVector) -> Result<LatticeResponse, EvalError> {
        self.run(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ParameterGrid;

    #[test]
    fn request_line_is_single_json_line() {
        let sol = SolutionVector::new(
            [1.4, 2.2, 2.6, 4.2, 5.0, 4.7, 3.7, 4.1, 4.9, 5.0, 5.0],
            [8.0, 7.0, 6.0, 8.0],
            &ParameterGrid::default(),
        )
        .unwrap();
        assert_eq!(
            request_line(&sol),
            "{\"enr\":[1.4,2.2,2.6,4.2,5.0,4.7,3.7,4.1,4.9,5.0,5.0],\"gad\":[8.0,7.0,6.0,8.0]}\n"
        );
    }

    #[test]
    fn response_parsing() {
        let r = parse_response_line("{\"kinf\":1.05,\"ppf\":1.2}\n").unwrap();
        assert_eq!((r.kinf, r.ppf), (1.05, 1.2));
        assert!(matches!(parse_response_line("not json"), Err(EvalError::ProtocolError(_))));
        assert!(matches!(parse_response_line(""), Err(EvalError::ProtocolError(_))));
        assert!(matches!(
            parse_response_line("{\"kinf\":1.05}"),
            Err(EvalError::ProtocolError(_))
        ));
    }

    #[test]
    fn empty_command_rejected() {
        assert!(ExternalEvaluator::new(ExternalConfig::default()).is_err());
    }
}
