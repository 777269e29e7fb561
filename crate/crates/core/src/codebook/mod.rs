//! Codebooks with verified minimum distance.
//!
//! A [`Codebook`] is the ordered list of `q^k` codewords of length `n`, where
//! word `i` is the encoding of the data string whose base-`q` value is `i`
//! (most significant symbol first). Every constructor runs the brute-force
//! [`min_distance`] oracle, so the stored `d_min` is always measured rather
//! than assumed.

mod crc;
mod generator;
mod presets;
mod search;

use std::fmt;
use std::io::{self, Write};

pub use crc::{crc_append, crc_remainder, parity_ok, CRC5_ITU};
pub use generator::{build_codebook, ecc_encode, nary_encode, GeneratorSpec};
pub use presets::Preset;
pub use search::{poisson_disk_search, DEFAULT_SEARCH_BUDGET};

use crate::error::{domain, Error, Result};
use crate::par;

/// A fixed-length string of symbols over an alphabet of size `q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword(Vec<u8>);

impl Codeword {
    pub fn new(symbols: Vec<u8>) -> Self {
        Codeword(symbols)
    }

    /// The `n` low bits of `bits`, most significant first.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Codeword((0..n).map(|i| ((bits >> (n - 1 - i)) & 1) as u8).collect())
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Symbol-wise Hamming distance. Panics on length mismatch.
    pub fn distance(&self, other: &Codeword) -> usize {
        assert_eq!(self.len(), other.len(), "codeword length mismatch");
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Packs a binary word (n ≤ 64) with symbol 0 in the highest used bit.
    pub fn to_bits(&self) -> u64 {
        debug_assert!(self.len() <= 64);
        self.0.iter().fold(0u64, |acc, &s| (acc << 1) | (s & 1) as u64)
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            if *s < 10 {
                write!(f, "{s}")?;
            } else {
                write!(f, "[{s}]")?;
            }
        }
        Ok(())
    }
}

impl From<&str> for Codeword {
    /// Parses a string of decimal digits, e.g. `"0110"`.
    fn from(s: &str) -> Self {
        Codeword(
            s.chars()
                .map(|c| c.to_digit(10).expect("non-digit symbol") as u8)
                .collect(),
        )
    }
}

/// An `(n, k, d_min)` code over an alphabet of size `q`.
#[derive(Clone, Debug)]
pub struct Codebook {
    name: String,
    n: usize,
    k: usize,
    q: u8,
    words: Vec<Codeword>,
    packed: Vec<u64>,
    d_min: usize,
    systematic: bool,
}

impl Codebook {
    /// Validates the words and measures `d_min` with the brute-force oracle.
    ///
    /// `systematic` is checked, not trusted: it is set only if word `i` really
    /// begins with the `k`-symbol representation of `i`.
    pub fn new(name: impl Into<String>, n: usize, k: usize, q: u8, words: Vec<Codeword>) -> Result<Self> {
        if q < 2 {
            return domain("alphabet size must be at least 2");
        }
        let expected = (q as usize)
            .checked_pow(k as u32)
            .ok_or_else(|| Error::Domain("q^k overflows".into()))?;
        if words.len() != expected {
            return domain(format!("expected {expected} words, got {}", words.len()));
        }
        if k > n {
            return domain(format!("k = {k} exceeds n = {n}"));
        }
        for w in &words {
            if w.len() != n {
                return domain(format!("word length {} differs from n = {n}", w.len()));
            }
            if w.symbols().iter().any(|&s| s >= q) {
                return domain(format!("symbol out of range for q = {q}"));
            }
        }
        let packed = if q == 2 && n <= 64 {
            words.iter().map(Codeword::to_bits).collect()
        } else {
            Vec::new()
        };
        let systematic = words
            .iter()
            .enumerate()
            .all(|(i, w)| w.symbols()[..k] == data_symbols(i, k, q)[..]);
        let mut book = Codebook {
            name: name.into(),
            n,
            k,
            q,
            words,
            packed,
            d_min: 0,
            systematic,
        };
        book.d_min = min_distance_of(&book)?;
        if book.d_min == 0 {
            return Err(Error::Construction("codebook contains duplicate words".into()));
        }
        if book.d_min > n - k + 1 {
            return Err(Error::Construction(format!(
                "measured d_min = {} exceeds the Singleton bound {}",
                book.d_min,
                n - k + 1
            )));
        }
        Ok(book)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn d_min(&self) -> usize {
        self.d_min
    }

    pub fn is_systematic(&self) -> bool {
        self.systematic
    }

    pub fn words(&self) -> &[Codeword] {
        &self.words
    }

    pub fn word(&self, index: usize) -> &Codeword {
        &self.words[index]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Bit-packed words for binary codes with n ≤ 64, empty otherwise.
    pub fn packed(&self) -> &[u64] {
        &self.packed
    }

    /// Guaranteed correction radius `⌊(d_min − 1) / 2⌋`.
    pub fn correction_radius(&self) -> usize {
        (self.d_min - 1) / 2
    }

    pub(crate) fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Plain-text export: a header line with the verified parameters, then one word per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# {}", self.name)?;
        writeln!(out, "{} {} {} {}", self.n, self.k, self.q, self.d_min)?;
        for w in &self.words {
            let line: Vec<String> = w.symbols().iter().map(u8::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Reads the format produced by [`Codebook::write_text`], re-verifying `d_min`.
    pub fn read_text(text: &str) -> Result<Self> {
        let mut name = String::from("imported");
        let mut lines = text.lines().filter(|l| {
            if let Some(rest) = l.strip_prefix('#') {
                name = rest.trim().to_string();
                false
            } else {
                !l.trim().is_empty()
            }
        });
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let fields = parse_usizes(header)?;
        let [n, k, q, d_claimed] = fields[..] else {
            return Err(Error::Parse(format!("header needs 4 fields: {header:?}")));
        };
        let words = lines
            .map(|l| parse_usizes(l).map(|v| Codeword::new(v.into_iter().map(|s| s as u8).collect())))
            .collect::<Result<Vec<_>>>()?;
        let book = Codebook::new(name, n, k, q as u8, words)?;
        if book.d_min != d_claimed {
            return Err(Error::Parse(format!(
                "header claims d_min = {d_claimed}, oracle measured {}",
                book.d_min
            )));
        }
        Ok(book)
    }
}

pub(crate) fn parse_usizes(line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {t:?}"))))
        .collect()
}

/// Base-`q` digits of `index`, most significant first, padded to `k` symbols.
pub fn data_symbols(index: usize, k: usize, q: u8) -> Vec<u8> {
    let mut out = vec![0u8; k];
    let mut x = index;
    for slot in out.iter_mut().rev() {
        *slot = (x % q as usize) as u8;
        x /= q as usize;
    }
    out
}

/// Reflected binary Gray code of `index` as `k` bits, most significant first.
pub fn gray_encode(index: u64, k: u32) -> Result<Vec<u8>> {
    if k > 63 || index >> k != 0 {
        return domain(format!("index {index} out of range for {k} bits"));
    }
    let g = index ^ (index >> 1);
    Ok(Codeword::from_bits(g, k as usize).into_inner())
}

/// Integer value of the Gray codeword of `index`.
pub fn gray_index(index: usize) -> usize {
    index ^ (index >> 1)
}

/// Reflected q-ary Gray code of `index` as `k` digits (most significant first).
///
/// Consecutive indices differ in exactly one digit, by ±1. For `q = 2` this is
/// the ordinary binary reflected Gray code.
pub fn gray_encode_q(index: usize, k: usize, q: u8) -> Result<Vec<u8>> {
    let limit = (q as usize).checked_pow(k as u32).unwrap_or(usize::MAX);
    if index >= limit {
        return domain(format!("index {index} out of range for {k} digits base {q}"));
    }
    let digits = data_symbols(index, k, q);
    let mut out = Vec::with_capacity(k);
    // parity of the value formed by the higher digits
    let mut higher_odd = false;
    for d in digits {
        let g = if higher_odd { q - 1 - d } else { d };
        out.push(g);
        higher_odd = (higher_odd && q % 2 == 1) ^ (d % 2 == 1);
    }
    Ok(out)
}

/// Base-`q` value of a digit string (most significant first).
pub fn symbols_value(symbols: &[u8], q: u8) -> usize {
    symbols.iter().fold(0usize, |acc, &s| acc * q as usize + s as usize)
}

/// Exact minimum pairwise Hamming distance of a codebook (brute force).
pub fn min_distance(book: &Codebook) -> Result<usize> {
    min_distance_of(book)
}

fn min_distance_of(book: &Codebook) -> Result<usize> {
    if book.packed.len() == book.words.len() {
        min_distance_packed(&book.packed)
    } else {
        min_distance_words(&book.words)
    }
}

/// Minimum pairwise distance over arbitrary words.
pub fn min_distance_words(words: &[Codeword]) -> Result<usize> {
    if words.len() < 2 {
        return domain("minimum distance needs at least two words");
    }
    let n = words.len();
    Ok(par::min_range(n - 1, |i| {
        words[i + 1..]
            .iter()
            .map(|w| words[i].distance(w))
            .min()
            .unwrap_or(usize::MAX)
    })
    .unwrap())
}

/// Minimum pairwise distance over bit-packed binary words.
pub fn min_distance_packed(words: &[u64]) -> Result<usize> {
    if words.len() < 2 {
        return domain("minimum distance needs at least two words");
    }
    let n = words.len();
    Ok(par::min_range(n - 1, |i| {
        let a = words[i];
        words[i + 1..]
            .iter()
            .map(|&b| (a ^ b).count_ones() as usize)
            .min()
            .unwrap_or(usize::MAX)
    })
    .unwrap())
}

/// Shortens a systematic code by forcing the first `l` data symbols to zero and deleting them.
///
/// The result is an `(n − l, k − l)` code whose minimum distance is at least
/// that of the input.
pub fn truncate_code(book: &Codebook, l: usize) -> Result<Codebook> {
    if !book.systematic {
        return Err(Error::Unsupported(format!("{} is not systematic", book.name)));
    }
    if l >= book.k {
        return domain(format!("truncation length {l} must be below k = {}", book.k));
    }
    if l == 0 {
        return Ok(book.clone());
    }
    // data values with l leading zero symbols are exactly the first q^(k-l) indices
    let keep = (book.q as usize).pow((book.k - l) as u32);
    let words = book.words[..keep]
        .iter()
        .map(|w| {
            debug_assert!(w.symbols()[..l].iter().all(|&s| s == 0));
            Codeword::new(w.symbols()[l..].to_vec())
        })
        .collect();
    Codebook::new(
        format!("{}-short{l}", book.name),
        book.n - l,
        book.k - l,
        book.q,
        words,
    )
}
