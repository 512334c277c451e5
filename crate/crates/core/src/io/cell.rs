use crate::model::{ChangeKind, StateChange};

const ARROW: &str = "→";

/// Parses a grid cell: `-`, `C`, `M soil→root`, `D leaf→?`, `C →leaf`.
/// `->` is accepted in place of `→`.
pub fn parse_cell(cell: &str) -> Result<StateChange, String> {
    let cell = cell.trim();
    let (code, rest) = match cell.find(char::is_whitespace) {
        Some(i) => (&cell[..i], cell[i..].trim()),
        None => (cell, ""),
    };
    let kind = ChangeKind::parse(code).ok_or_else(|| format!("unknown change code `{code}`"))?;
    if rest.is_empty() {
        return Ok(StateChange::bare(kind));
    }
    let (from, to) = rest
        .split_once(ARROW)
        .or_else(|| rest.split_once("->"))
        .ok_or_else(|| format!("location suffix `{rest}` lacks `from→to`"))?;
    StateChange::new(kind, Some(from.to_string()), Some(to.to_string()))
        .map_err(|e| e.to_string())
}

/// Inverse of [`parse_cell`]; absent locations print as `?`.
pub fn format_cell(change: &StateChange) -> String {
    let code = change.kind().code();
    if change.from_loc().is_none() && change.to_loc().is_none() {
        return code.to_string();
    }
    format!(
        "{code} {}{ARROW}{}",
        change.from_loc().unwrap_or("?"),
        change.to_loc().unwrap_or("?")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        assert_eq!(
            parse_cell("M soil→root").unwrap(),
            StateChange::moved(Some("soil".into()), Some("root".into()))
        );
        assert_eq!(parse_cell("-").unwrap(), StateChange::none());
        assert_eq!(parse_cell("C ?→leaf").unwrap(), StateChange::create(Some("leaf".into())));
        assert_eq!(parse_cell("C →leaf").unwrap(), StateChange::create(Some("leaf".into())));
        assert_eq!(
            parse_cell("M the soil -> the root").unwrap(),
            StateChange::moved(Some("the soil".into()), Some("the root".into()))
        );
        assert!(parse_cell("X").is_err());
        assert!(parse_cell("M soil").is_err());
        assert!(parse_cell("C soil→?").is_err());
        assert!(parse_cell("- a→b").is_err());
    }

    #[test]
    fn format_round_trip() {
        for s in ["-", "C", "M soil→root", "M ?→leaf", "D leaf→?", "C ?→leaf"] {
            assert_eq!(format_cell(&parse_cell(s).unwrap()), s);
        }
    }
}
