//! Small text helpers shared by the parser, encoder and matchers.

/// Word separators folded to spaces: ASCII `_` and `-` plus the unicode dash
/// family (hyphen, en/em dashes, minus sign, ...).
pub fn is_separator(c: char) -> bool {
    matches!(c, '_' | '-' | '\u{2010}'..='\u{2015}' | '\u{2212}' | '\u{FE58}' | '\u{FE63}' | '\u{FF0D}')
}

/// Inserts a space at camelCase boundaries: `HeatTreatment` becomes
/// `Heat Treatment` and `HTMLParser` becomes `HTML Parser`.
pub fn split_camel_case(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len() + 4);
    for (i, &c) in chars.iter().enumerate() {
        if i > 0 && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.push(c);
    }
    out
}

/// Splits on camelCase boundaries and separators, joining words with single
/// spaces. Case is preserved.
pub fn split_words(s: &str) -> String {
    let spaced: String = split_camel_case(s).chars().map(|c| if is_separator(c) { ' ' } else { c }).collect();
    spaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercased alphanumeric tokens, in order of appearance.
pub fn tokenize(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}
