//! Extraction of `<sol> ... <\sol>` blocks from free-form model output.

use serde::{Deserialize, Serialize};

use crate::lattice::{snap_to_grid, ParameterGrid, SolutionVector, N_PARAMS};

pub const OPEN_TAG: &str = "<sol>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseMode {
    Strict,
    #[default]
    SnapToGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    BadTokenCount,
    NonNumeric,
    OffGrid,
    OutOfBounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    /// 0-based index of the block within the response.
    pub block: usize,
    pub body: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedResponse {
    pub candidates: Vec<SolutionVector>,
    pub rejects: Vec<Reject>,
}

/// Block bodies in order of appearance.
///
/// A block closes at the first `<\sol` or `</sol` (trailing `>` optional).
/// When no closer precedes the next `<sol>` or the end of input, the block
/// ends at the end of its line.
pub fn extract_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find(OPEN_TAG) {
        let after = &rest[start + OPEN_TAG.len()..];
        let next_open = after.find(OPEN_TAG).unwrap_or(after.len());
        let closer = find_closer(&after[..next_open]);
        let (body, consumed) = match closer {
            Some((at, len)) => (&after[..at], at + len),
            None => {
                let eol = after[..next_open].find('\n').unwrap_or(next_open);
                (&after[..eol], eol)
            }
        };
        blocks.push(body);
        rest = &after[consumed..];
    }
    blocks
}

fn find_closer(s: &str) -> Option<(usize, usize)> {
    let at = [r"<\sol", "</sol"]
        .iter()
        .filter_map(|pat| s.find(pat))
        .min()?;
    let len = if s[at + 5..].starts_with('>') { 6 } else { 5 };
    Some((at, len))
}

fn classify(body: &str, grid: &ParameterGrid, mode: ParseMode) -> Result<SolutionVector, RejectReason> {
    let tokens: Vec<&str> = body.split(',').map(str::trim).collect();
    if tokens.len() != N_PARAMS {
        return Err(RejectReason::BadTokenCount);
    }
    let values = tokens
        .iter()
        .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or(RejectReason::NonNumeric)?;
    match mode {
        ParseMode::SnapToGrid => snap_to_grid(&values, grid).map_err(|_| RejectReason::NonNumeric),
        ParseMode::Strict => {
            let axes = (0..N_PARAMS).map(|slot| grid.slot_axis(slot));
            let out_of_bounds = values.iter().zip(axes).any(|(&v, ax)| {
                v < ax.min_value() - 1e-9 || v > ax.max_value() + 1e-9
            });
            if out_of_bounds {
                return Err(RejectReason::OutOfBounds);
            }
            SolutionVector::from_values(&values, grid).map_err(|_| RejectReason::OffGrid)
        }
    }
}

/// Parse every block in `text`. Never fails; bad blocks land in `rejects`.
pub fn parse_response(text: &str, grid: &ParameterGrid, mode: ParseMode) -> ParsedResponse {
    let mut out = ParsedResponse::default();
    for (block, body) in extract_blocks(text).into_iter().enumerate() {
        match classify(body, grid, mode) {
            Ok(sol) => out.candidates.push(sol),
            Err(reason) => out.rejects.push(Reject {
                block,
                body: body.trim().to_string(),
                reason,
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_arity_is_rejected() {
        let p = parse_response(r"<sol> 1,2,3 <\sol>", &ParameterGrid::default(), ParseMode::SnapToGrid);
        assert!(p.candidates.is_empty());
        assert_eq!(p.rejects.len(), 1);
        assert_eq!(p.rejects[0].reason, RejectReason::BadTokenCount);
    }

    #[test]
    fn non_numeric_token() {
        let body = "1,2,3,4,5,1,2,3,x,1,2,3,4,5,6";
        let p = parse_response(&format!("<sol>{body}</sol>"), &ParameterGrid::default(), ParseMode::SnapToGrid);
        assert_eq!(p.rejects[0].reason, RejectReason::NonNumeric);
        let nan = body.replace('x', "NaN");
        let p = parse_response(&format!("<sol>{nan}</sol>"), &ParameterGrid::default(), ParseMode::SnapToGrid);
        assert_eq!(p.rejects[0].reason, RejectReason::NonNumeric);
    }

    #[test]
    fn strict_distinguishes_off_grid_from_out_of_bounds() {
        let grid = ParameterGrid::default();
        let off = r"<sol> 1.45,2.2,2.6,4.2,5.0,4.7,3.7,4.1,8.0,4.9,7.0,5.0,6.0,5.0,8.0 <\sol>";
        assert_eq!(parse_response(off, &grid, ParseMode::Strict).rejects[0].reason, RejectReason::OffGrid);
        let oob = r"<sol> 1.4,2.2,2.6,4.2,5.1,4.7,3.7,4.1,8.0,4.9,7.0,5.0,6.0,5.0,8.0 <\sol>";
        assert_eq!(parse_response(oob, &grid, ParseMode::Strict).rejects[0].reason, RejectReason::OutOfBounds);
        let ok = r"<sol> 1.4,2.2,2.6,4.2,5.0,4.7,3.7,4.1,8.0,4.9,7.0,5.0,6.0,5.0,8.0 <\sol>";
        assert_eq!(parse_response(ok, &grid, ParseMode::Strict).candidates.len(), 1);
    }

    #[test]
    fn closers_and_truncation() {
        let text = "<sol>a</sol> junk <sol>b<\\sol> <sol>c<\\sol\n<sol>d\nmore";
        assert_eq!(extract_blocks(text), vec!["a", "b", "c", "d"]);
        assert_eq!(extract_blocks("no tags here"), Vec::<&str>::new());
        assert_eq!(extract_blocks("<sol>x <sol>y</sol>"), vec!["x ", "y"]);
    }
}
