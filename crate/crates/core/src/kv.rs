//! Line-oriented `key = value` config parsing shared by the run-config and
//! synthesis-spec formats. `#` starts a comment; blank lines are ignored.

/// (key, value, 1-based line number) triples in file order.
pub(crate) fn parse(text: &str) -> Result<Vec<(String, String, usize)>, String> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`, got `{line}`", idx + 1))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", idx + 1));
        }
        out.push((key.to_string(), v.trim().to_string(), idx + 1));
    }
    Ok(out)
}
