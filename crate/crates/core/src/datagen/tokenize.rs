/// Lowercases and splits on whitespace and punctuation. Runs of letters,
/// digits and underscores form one token; a `-` directly followed by a digit
/// at the start of a token is kept as a sign. Every other punctuation
/// character is a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.to_lowercase().chars().collect();
    let word = |c: char| c.is_alphanumeric() || c == '_';
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        } else if word(c) {
            while i < chars.len() && word(chars[i]) {
                i += 1;
            }
        } else {
            i += 1;
        }
        out.push(chars[start..i].iter().collect());
    }
    out
}

/// Integer literals mentioned in a token list, in order of first appearance.
pub fn int_literals(tokens: &[String]) -> Vec<i64> {
    let mut out = Vec::new();
    for t in tokens {
        if let Ok(n) = t.parse::<i64>() {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_and_keeps_signs() {
        assert_eq!(
            tokenize("Given an array a, find values -3 or 12-4."),
            ["given", "an", "array", "a", ",", "find", "values", "-3", "or", "12", "-4", "."]
        );
        assert_eq!(int_literals(&tokenize("by 3 and -3 and 3")), vec![3, -3]);
    }
}
