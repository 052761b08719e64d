use std::fmt;

use serde::{Deserialize, Serialize};

/// Reserved surface of the sentence-boundary marker. The tokenizer treats
/// `<` and `>` as separators, so user text can never produce it.
pub const BOUNDARY: &str = "<s>";

/// Punctuation kept as standalone tokens; every other non-alphanumeric
/// character separates tokens.
pub const PUNCTUATION: [char; 6] = ['.', ',', '!', '?', '\'', '-'];

/// Sentence-final punctuation.
pub const TERMINAL: [char; 3] = ['.', '!', '?'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Punctuation,
    Boundary,
}

/// A lowercase token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    surface: String,
    kind: TokenKind,
}

impl Token {
    pub fn boundary() -> Self {
        Self {
            surface: BOUNDARY.to_string(),
            kind: TokenKind::Boundary,
        }
    }

    /// Rebuilds a token from a stored surface. Returns `None` for surfaces the
    /// tokenizer could never have produced.
    pub fn from_surface(surface: &str) -> Option<Self> {
        let kind = classify(surface)?;
        Some(Self {
            surface: surface.to_string(),
            kind,
        })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    pub fn is_terminal(&self) -> bool {
        self.kind == TokenKind::Punctuation && self.surface.chars().all(|c| TERMINAL.contains(&c))
    }

    pub fn into_surface(self) -> String {
        self.surface
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

pub(crate) fn classify(surface: &str) -> Option<TokenKind> {
    if surface == BOUNDARY {
        return Some(TokenKind::Boundary);
    }
    let mut chars = surface.chars();
    match (chars.next(), chars.next()) {
        (None, _) => None,
        (Some(c), None) if PUNCTUATION.contains(&c) => Some(TokenKind::Punctuation),
        _ if surface.chars().all(char::is_alphanumeric) => Some(TokenKind::Word),
        _ => None,
    }
}

/// Splits raw text into lowercase word and punctuation tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            tokens.push(Token {
                surface: std::mem::take(word),
                kind: TokenKind::Word,
            });
        }
    };
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            flush(&mut word, &mut tokens);
            if PUNCTUATION.contains(&c) {
                tokens.push(Token {
                    surface: c.to_string(),
                    kind: TokenKind::Punctuation,
                });
            }
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

/// Joins tokens back into display text: sentence punctuation hugs the
/// preceding word, apostrophes and hyphens hug both neighbours. Boundary
/// markers are dropped.
pub fn detokenize<'a, I>(tokens: I) -> String
where
    I: IntoIterator<Item = &'a Token>,
{
    let mut out = String::new();
    let mut glue_next = true;
    for token in tokens {
        match token.kind {
            TokenKind::Boundary => continue,
            TokenKind::Punctuation => {
                out.push_str(&token.surface);
                glue_next = matches!(token.surface.as_str(), "'" | "-");
            }
            TokenKind::Word => {
                if !glue_next {
                    out.push(' ');
                }
                out.push_str(&token.surface);
                glue_next = false;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(Token::into_surface).collect()
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t\n").is_empty());
    }

    #[test]
    fn splits_punctuation() {
        assert_eq!(surfaces("Hello, world!"), ["hello", ",", "world", "!"]);
        let kinds: Vec<_> = tokenize("Hello, world!").iter().map(Token::kind).collect();
        assert_eq!(
            kinds,
            [TokenKind::Word, TokenKind::Punctuation, TokenKind::Word, TokenKind::Punctuation]
        );
    }

    #[test]
    fn keeps_typos_verbatim() {
        assert_eq!(
            surfaces("We are stuck in the dessert?"),
            ["we", "are", "stuck", "in", "the", "dessert", "?"]
        );
    }

    #[test]
    fn other_symbols_separate_words() {
        assert_eq!(surfaces("ship;pirate  (arr)"), ["ship", "pirate", "arr"]);
        assert_eq!(surfaces("don't sea-faring"), ["don", "'", "t", "sea", "-", "faring"]);
    }

    #[test]
    fn boundary_marker_is_unreachable_from_text() {
        assert_eq!(surfaces("<s> a </s>"), ["s", "a", "s"]);
        assert!(tokenize("<s>").iter().all(|t| t.kind() != TokenKind::Boundary));
    }

    #[test]
    fn detokenize_restores_display_text() {
        let text = "hello, world! don't go sea-faring.";
        assert_eq!(detokenize(&tokenize(text)), text);
        assert_eq!(detokenize(&[Token::boundary()]), "");
    }

    #[test]
    fn surface_classification() {
        assert_eq!(Token::from_surface("abc").unwrap().kind(), TokenKind::Word);
        assert_eq!(Token::from_surface("?").unwrap().kind(), TokenKind::Punctuation);
        assert_eq!(Token::from_surface(BOUNDARY).unwrap().kind(), TokenKind::Boundary);
        assert!(Token::from_surface("").is_none());
        assert!(Token::from_surface("a b").is_none());
        assert!(Token::from_surface("a.b").is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokens_are_well_formed(text in ".{0,80}") {
                for token in tokenize(&text) {
                    prop_assert!(!token.surface().is_empty());
                    prop_assert!(!token.surface().chars().any(char::is_whitespace));
                    prop_assert_ne!(token.kind(), TokenKind::Boundary);
                    prop_assert_eq!(classify(token.surface()), Some(token.kind()));
                }
            }

            #[test]
            fn tokenize_detokenize_is_stable(text in "[a-zA-Z .,!?'-]{0,60}") {
                let once = tokenize(&text);
                prop_assert_eq!(tokenize(&detokenize(&once)), once);
            }
        }
    }
}
