//! Binary CRC over bit strings, most significant bit first.

use super::Codeword;
use crate::error::{domain, Result};

/// CRC-5-ITU, x^5 + x^4 + x^2 + 1 = (x + 1)(x^4 + x + 1).
pub const CRC5_ITU: [u8; 6] = [1, 1, 0, 1, 0, 1];

fn check_poly(poly: &[u8]) -> Result<()> {
    if poly.len() < 2 || poly[0] != 1 || poly.iter().any(|&b| b > 1) {
        return domain("CRC polynomial must be binary with leading coefficient 1 and degree ≥ 1");
    }
    Ok(())
}

fn remainder(bits: &[u8], poly: &[u8]) -> Vec<u8> {
    let r = poly.len() - 1;
    let mut work = bits.to_vec();
    for i in 0..bits.len().saturating_sub(r) {
        if work[i] == 1 {
            for (j, &p) in poly.iter().enumerate() {
                work[i + j] ^= p;
            }
        }
    }
    work[work.len() - r..].to_vec()
}

/// Remainder of `data · x^r` divided by `poly` (degree r), as r bits.
pub fn crc_remainder(data: &[u8], poly: &[u8]) -> Result<Vec<u8>> {
    check_poly(poly)?;
    if data.is_empty() {
        return domain("empty data string");
    }
    if data.iter().any(|&b| b > 1) {
        return domain("CRC data must be binary");
    }
    let r = poly.len() - 1;
    let mut shifted = data.to_vec();
    shifted.extend(std::iter::repeat_n(0, r));
    Ok(remainder(&shifted, poly))
}

/// `data` followed by its CRC remainder.
pub fn crc_append(data: &[u8], poly: &[u8]) -> Result<Codeword> {
    let rem = crc_remainder(data, poly)?;
    let mut out = data.to_vec();
    out.extend(rem);
    Ok(Codeword::new(out))
}

/// True iff the full codeword is divisible by `poly`.
pub fn parity_ok(word: &[u8], poly: &[u8]) -> Result<bool> {
    check_poly(poly)?;
    if word.len() < poly.len() {
        return domain("word shorter than the CRC polynomial");
    }
    Ok(remainder(word, poly).iter().all(|&b| b == 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_zero_suffix() {
        let cw = crc_append(&[0; 10], &CRC5_ITU).unwrap();
        assert_eq!(cw.symbols(), &[0; 15]);
    }

    #[test]
    fn empty_data_rejected() {
        assert!(crc_append(&[], &CRC5_ITU).is_err());
        assert!(crc_append(&[1], &[0, 1]).is_err());
    }

    #[test]
    fn known_remainder() {
        // 1·x^5 mod (x^5+x^4+x^2+1) = x^4 + x^2 + 1
        assert_eq!(crc_remainder(&[1], &CRC5_ITU).unwrap(), vec![1, 0, 1, 0, 1]);
    }

    #[test]
    fn every_append_passes_check() {
        for v in 0u64..1024 {
            let data = Codeword::from_bits(v, 10);
            let cw = crc_append(data.symbols(), &CRC5_ITU).unwrap();
            assert!(parity_ok(cw.symbols(), &CRC5_ITU).unwrap());
            let mut bad = cw.symbols().to_vec();
            bad[(v % 15) as usize] ^= 1;
            assert!(!parity_ok(&bad, &CRC5_ITU).unwrap());
        }
    }
}
