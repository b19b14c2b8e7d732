use std::cmp::Ordering;
use std::fmt;

/// A word in the letters `1..=d`. Words are ordered graded-lexicographically:
/// shorter words first, ties broken letter by letter.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Single-letter word `x_i` (1-based letter index).
    pub fn letter(i: usize) -> Self {
        assert!(i >= 1 && i <= u16::MAX as usize, "letter index {i} out of range");
        Word(vec![i as u16])
    }

    pub fn from_letters(letters: &[usize]) -> Self {
        Word(
            letters
                .iter()
                .map(|&i| {
                    assert!(i >= 1 && i <= u16::MAX as usize, "letter index {i} out of range");
                    i as u16
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.0.iter().map(|&l| l as usize)
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().map(|&l| l as usize)
    }

    pub fn max_letter(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `x_i · w`
    pub fn prepend(&self, i: usize) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(i as u16);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// `w · x_i`
    pub fn append(&self, i: usize) -> Word {
        let mut v = self.0.clone();
        v.push(i as u16);
        Word(v)
    }

    /// Splits `x_{i1} w'` into `(i1, w')`.
    pub fn split_first(&self) -> Option<(usize, Word)> {
        self.0
            .split_first()
            .map(|(&h, t)| (h as usize, Word(t.to_vec())))
    }

    pub fn strip_prefix(&self, prefix: &Word) -> Option<Word> {
        self.0.strip_prefix(prefix.0.as_slice()).map(|t| Word(t.to_vec()))
    }

    pub fn strip_suffix(&self, suffix: &Word) -> Option<Word> {
        self.0.strip_suffix(suffix.0.as_slice()).map(|t| Word(t.to_vec()))
    }

    /// Position among the words of the same length, in base `d`.
    pub fn lex_rank(&self, d: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * d + (l as usize - 1))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("1");
        }
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            write!(f, "x{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}
