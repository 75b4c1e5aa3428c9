use crate::text::split_words;

/// Human-readable label derived from an IRI when no label annotation exists.
///
/// Takes the fragment after `#` (or the last path segment), splits camelCase,
/// `_` and `-` into words, and falls back to the full IRI when nothing usable
/// remains.
pub fn derive_label(iri: &str) -> String {
    let local = match iri.rfind('#') {
        Some(pos) => &iri[pos + 1..],
        None => iri.rsplit('/').next().unwrap_or(""),
    };
    let words = split_words(local);
    if words.is_empty() {
        iri.to_string()
    } else {
        words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fragment_camel_case() {
        assert_eq!(derive_label("http://x.org/onto#HeatTreatment"), "Heat Treatment");
        assert_eq!(derive_label("http://x.org/onto#MeltingPoint"), "Melting Point");
    }

    #[test]
    fn fragment_underscores() {
        assert_eq!(derive_label("http://x.org/onto#melting_point"), "melting point");
        assert_eq!(derive_label("http://x.org/onto/heat-treatment"), "heat treatment");
    }

    #[test]
    fn degenerate_falls_back_to_iri() {
        assert_eq!(derive_label("http://x.org/onto/"), "http://x.org/onto/");
        assert_eq!(derive_label("http://x.org/onto#"), "http://x.org/onto#");
        assert_eq!(derive_label("urn:x#__"), "urn:x#__");
    }
}
