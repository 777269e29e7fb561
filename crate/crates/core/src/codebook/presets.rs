use std::fmt;
use std::str::FromStr;

use super::crc::{crc_append, CRC5_ITU};
use super::generator::{build_codebook, GeneratorSpec};
use super::{gray_encode, truncate_code, Codebook};
use crate::error::{Error, Result};
use crate::patterns::Arrangement;

const GOLAY24: &str = include_str!("../../presets/golay24.txt");
const HAMMING16: &str = include_str!("../../presets/hamming16.txt");
const BCH63: &str = include_str!("../../presets/bch63.txt");
const CRC5: &str = include_str!("../../presets/crc5.txt");
const EBCH32: &str = include_str!("../../presets/ebch32.txt");
const TERNARY_GOLAY12: &str = include_str!("../../presets/ternary_golay12.txt");
const RS7: &str = include_str!("../../presets/rs7.txt");

/// Named codebooks shipped with the library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Uncoded 10-bit Gray code, (10, 10, 1).
    Gray10,
    /// Uncoded 10-bit binary code, (10, 10, 1).
    Binary10,
    /// Uncoded 9-bit Gray code, (9, 9, 1).
    Gray9,
    /// Extended binary Golay code, (24, 12, 8).
    Golay24,
    /// Golay shortened by two, (22, 10, 8).
    Golay22,
    /// Extended Hamming code, (16, 11, 4).
    Hamming16,
    /// Extended Hamming shortened by one, (15, 10, 4).
    Hamming15,
    /// Narrow-sense BCH code with designed distance 27, (63, 10, 27).
    Bch63,
    /// Gray-indexed 10-bit data with CRC-5 appended, (15, 10, 4).
    Crc5,
    /// XOR02 high-frequency data frames with CRC-5 appended, (15, 10, 4).
    Xor02Crc5,
    /// Extended BCH, (32, 11, 12).
    Ebch32,
    /// Extended BCH shortened by one, (31, 10, 12).
    Bch31,
    /// Extended ternary Golay code, (12, 6, 6) over GF(3).
    TernaryGolay12,
    /// Uncoded 6-digit ternary Gray code, (6, 6, 1) over GF(3).
    Ternary6,
    /// Reed-Solomon over GF(8), (7, 3, 5).
    Rs7,
}

impl Preset {
    pub const ALL: [Preset; 15] = [
        Preset::Gray10,
        Preset::Binary10,
        Preset::Gray9,
        Preset::Golay24,
        Preset::Golay22,
        Preset::Hamming16,
        Preset::Hamming15,
        Preset::Bch63,
        Preset::Crc5,
        Preset::Xor02Crc5,
        Preset::Ebch32,
        Preset::Bch31,
        Preset::TernaryGolay12,
        Preset::Ternary6,
        Preset::Rs7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Gray10 => "gray10",
            Preset::Binary10 => "binary10",
            Preset::Gray9 => "gray9",
            Preset::Golay24 => "golay24",
            Preset::Golay22 => "golay22",
            Preset::Hamming16 => "hamming16",
            Preset::Hamming15 => "hamming15",
            Preset::Bch63 => "bch63",
            Preset::Crc5 => "crc5",
            Preset::Xor02Crc5 => "xor02-crc5",
            Preset::Ebch32 => "ebch32",
            Preset::Bch31 => "bch31",
            Preset::TernaryGolay12 => "ternary-golay12",
            Preset::Ternary6 => "ternary6",
            Preset::Rs7 => "rs7",
        }
    }

    /// The generator this preset is built from, with its data length.
    ///
    /// Shortened and derived presets report the generator of their parent.
    pub fn generator(self) -> Result<(GeneratorSpec, usize)> {
        let parsed = |text: &str| GeneratorSpec::parse(text).map(|(_, k, spec)| (spec, k));
        match self {
            Preset::Gray10 | Preset::Binary10 => Ok((GeneratorSpec::Identity { k: 10, q: 2 }, 10)),
            Preset::Gray9 => Ok((GeneratorSpec::Identity { k: 9, q: 2 }, 9)),
            Preset::Ternary6 => Ok((GeneratorSpec::Identity { k: 6, q: 3 }, 6)),
            Preset::Golay24 | Preset::Golay22 => parsed(GOLAY24),
            Preset::Hamming16 | Preset::Hamming15 => parsed(HAMMING16),
            Preset::Bch63 => parsed(BCH63),
            Preset::Crc5 | Preset::Xor02Crc5 => parsed(CRC5),
            Preset::Ebch32 | Preset::Bch31 => parsed(EBCH32),
            Preset::TernaryGolay12 => parsed(TERNARY_GOLAY12),
            Preset::Rs7 => parsed(RS7),
        }
    }

    /// Builds the codebook and verifies its minimum distance with the oracle.
    pub fn build(self) -> Result<Codebook> {
        let name = self.name();
        let (spec, k) = self.generator()?;
        let book = match self {
            Preset::Golay22 => truncate_code(&build_codebook(&spec, k, "golay24")?, 2)?,
            Preset::Hamming15 => truncate_code(&build_codebook(&spec, k, "hamming16")?, 1)?,
            Preset::Bch31 => truncate_code(&build_codebook(&spec, k, "ebch32")?, 1)?,
            Preset::Xor02Crc5 => xor02_crc5_book()?,
            _ => build_codebook(&spec, k, name)?,
        };
        Ok(book.renamed(name))
    }

    /// Column-to-data arrangement the preset is meant to be projected with.
    pub fn default_arrangement(self) -> Arrangement {
        match self {
            Preset::Binary10 | Preset::Xor02Crc5 => Arrangement::Binary,
            _ => Arrangement::Gray,
        }
    }

    /// `(n, k, d_min)` as documented; `build` re-measures `d_min`.
    pub fn nominal(self) -> (usize, usize, usize) {
        match self {
            Preset::Gray10 | Preset::Binary10 => (10, 10, 1),
            Preset::Gray9 => (9, 9, 1),
            Preset::Golay24 => (24, 12, 8),
            Preset::Golay22 => (22, 10, 8),
            Preset::Hamming16 => (16, 11, 4),
            Preset::Hamming15 => (15, 10, 4),
            Preset::Bch63 => (63, 10, 27),
            Preset::Crc5 | Preset::Xor02Crc5 => (15, 10, 4),
            Preset::Ebch32 => (32, 11, 12),
            Preset::Bch31 => (31, 10, 12),
            Preset::TernaryGolay12 => (12, 6, 6),
            Preset::Ternary6 => (6, 6, 1),
            Preset::Rs7 => (7, 3, 5),
        }
    }
}

/// XOR02 applied to the 10-bit Gray code of each column, then CRC-5 appended.
///
/// Word `i` is the temporal string of projector column `i`, so the book is not
/// systematic with respect to `i`.
fn xor02_crc5_book() -> Result<Codebook> {
    const K: usize = 10;
    let words = (0..1u64 << K)
        .map(|m| {
            let mut bits = gray_encode(m, K as u32)?;
            let base = bits[K - 2];
            for b in &mut bits[..K - 2] {
                *b ^= base;
            }
            crc_append(&bits, &CRC5_ITU)
        })
        .collect::<Result<Vec<_>>>()?;
    Codebook::new("xor02-crc5", K + 5, K, 2, words)
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset {s:?}; known presets: {}", names.join(", ")))
            })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
