/// A word as seen by the feature extractor: lowercase letters, possibly with
/// one internal apostrophe as in "don't".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub text: String,
}

impl Word {
    /// The part before the apostrophe and the clitic after it, if any.
    pub fn split_clitic(&self) -> Option<(&str, &str)> {
        self.text.split_once('\'')
    }

    pub fn letters(&self) -> String {
        self.text.chars().filter(|c| c.is_alphabetic()).collect()
    }
}

/// The words of a line plus whether its last stretch of words lacks
/// terminal punctuation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub words: Vec<Word>,
    pub unterminated: bool,
}

const TERMINAL: [char; 3] = ['.', '!', '?'];

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits a line into alphabetic words. Runs containing digits are not
/// words, and neither are stray apostrophes.
pub fn words(line: &str) -> Sentence {
    let mut out = Sentence::default();
    let mut words_since_terminal = false;
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            let mut run = String::new();
            let mut has_digit = false;
            while i < chars.len() {
                let c = chars[i];
                if c.is_alphanumeric() {
                    has_digit |= !c.is_alphabetic();
                    run.extend(c.to_lowercase());
                } else if is_apostrophe(c)
                    && !run.contains('\'')
                    && chars.get(i + 1).is_some_and(|n| n.is_alphabetic())
                {
                    run.push('\'');
                } else {
                    break;
                }
                i += 1;
            }
            if !has_digit {
                out.words.push(Word { text: run });
                words_since_terminal = true;
            }
            continue;
        }
        if TERMINAL.contains(&c) {
            words_since_terminal = false;
        }
        i += 1;
    }
    out.unterminated = words_since_terminal;
    out
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate. A final 'e' after a consonant is silent
/// unless it is the only vowel group.
pub fn syllables(word: &str) -> usize {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).flat_map(char::to_lowercase).collect();
    let mut groups = 0;
    let mut in_group = false;
    for &c in &letters {
        let vowel = is_vowel(c);
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    let n = letters.len();
    if n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]) && groups > 1 {
        groups -= 1;
    }
    groups.max(1)
}
