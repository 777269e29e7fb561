use super::{data_symbols, parse_usizes, Codebook, Codeword};
use crate::error::{domain, Error, Result};
use crate::gf::{self, Field};

/// How data strings are mapped to codewords.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorSpec {
    /// No redundancy: the codeword is the data string.
    Identity { k: usize, q: u8 },
    /// `k × n` generator matrix over GF(q); codeword = data · G.
    Matrix { q: u8, rows: Vec<Vec<u8>> },
    /// Systematic cyclic-style encoding with a generator polynomial over GF(q),
    /// coefficients from the highest degree down. Parity = −(data · x^r mod g).
    Polynomial { q: u8, coeffs: Vec<u8> },
}

impl GeneratorSpec {
    pub fn q(&self) -> u8 {
        match self {
            GeneratorSpec::Identity { q, .. }
            | GeneratorSpec::Matrix { q, .. }
            | GeneratorSpec::Polynomial { q, .. } => *q,
        }
    }

    /// Data length fixed by the generator, if any (polynomial codes accept any k).
    pub fn fixed_k(&self) -> Option<usize> {
        match self {
            GeneratorSpec::Identity { k, .. } => Some(*k),
            GeneratorSpec::Matrix { rows, .. } => Some(rows.len()),
            GeneratorSpec::Polynomial { .. } => None,
        }
    }

    /// Codeword length for data length `k`.
    pub fn n_for(&self, k: usize) -> usize {
        match self {
            GeneratorSpec::Identity { .. } => k,
            GeneratorSpec::Matrix { rows, .. } => rows.first().map_or(0, Vec::len),
            GeneratorSpec::Polynomial { coeffs, .. } => k + coeffs.len() - 1,
        }
    }

    /// Parses the preset text format.
    ///
    /// The header line is `n k q kind` with kind `matrix`, `poly` or `identity`.
    /// A matrix is followed by `k` rows of `n` symbols; a polynomial by one line
    /// of `n − k + 1` coefficients, highest degree first. Lines starting with `#`
    /// are comments.
    pub fn parse(text: &str) -> Result<(usize, usize, GeneratorSpec)> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty generator file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let [n, k, q, kind] = parts[..] else {
            return Err(Error::Parse(format!("header must be `n k q kind`, got {header:?}")));
        };
        let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
        let (n, k, q) = (num(n)?, num(k)?, num(q)?);
        if k == 0 || k > n {
            return Err(Error::Parse(format!("need 0 < k ≤ n, got n = {n}, k = {k}")));
        }
        if !(2..=255).contains(&q) {
            return Err(Error::Parse(format!("alphabet size {q} out of range")));
        }
        let q = q as u8;
        let to_symbols = |v: Vec<usize>| -> Result<Vec<u8>> {
            v.into_iter()
                .map(|s| {
                    if s < q as usize {
                        Ok(s as u8)
                    } else {
                        Err(Error::Parse(format!("symbol {s} not below q = {q}")))
                    }
                })
                .collect()
        };
        let spec = match kind {
            "identity" => {
                if n != k {
                    return Err(Error::Parse("identity code needs n = k".into()));
                }
                GeneratorSpec::Identity { k, q }
            }
            "matrix" => {
                let rows = lines
                    .map(|l| parse_usizes(l).and_then(to_symbols))
                    .collect::<Result<Vec<_>>>()?;
                if rows.len() != k || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Parse(format!("matrix must be {k} rows of {n} symbols")));
                }
                GeneratorSpec::Matrix { q, rows }
            }
            "poly" => {
                let line = lines.next().ok_or_else(|| Error::Parse("missing polynomial".into()))?;
                let coeffs = to_symbols(parse_usizes(line)?)?;
                if coeffs.len() != n - k + 1 {
                    return Err(Error::Parse(format!(
                        "polynomial of degree {} does not match n - k = {}",
                        coeffs.len().saturating_sub(1),
                        n - k
                    )));
                }
                GeneratorSpec::Polynomial { q, coeffs }
            }
            other => return Err(Error::Parse(format!("unknown generator kind {other:?}"))),
        };
        Ok((n, k, spec))
    }

    fn validate(&self, field: &Field) -> Result<()> {
        match self {
            GeneratorSpec::Identity { .. } => Ok(()),
            GeneratorSpec::Matrix { rows, .. } => {
                let n = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || rows.iter().any(|r| r.len() != n) || rows.len() > n {
                    return Err(Error::Construction("generator matrix must be k × n with k ≤ n".into()));
                }
                let r = gf::rank(field, rows);
                if r < rows.len() {
                    return Err(Error::Construction(format!(
                        "generator matrix has rank {r} < k = {}",
                        rows.len()
                    )));
                }
                Ok(())
            }
            GeneratorSpec::Polynomial { coeffs, .. } => {
                if coeffs.first() != Some(&1) {
                    return Err(Error::Construction("generator polynomial must be monic".into()));
                }
                Ok(())
            }
        }
    }
}

/// Encodes `data` with `spec`.
///
/// Binary and q-ary specs share this path; all arithmetic happens in GF(q).
pub fn ecc_encode(data: &[u8], spec: &GeneratorSpec) -> Result<Codeword> {
    let field = Field::new(spec.q() as u16)?;
    encode_with(&field, data, spec)
}

/// Encodes a q-ary symbol string. Identical to [`ecc_encode`] but rejects binary specs.
pub fn nary_encode(data: &[u8], spec: &GeneratorSpec) -> Result<Codeword> {
    if spec.q() < 3 {
        return domain("nary_encode expects an alphabet of size ≥ 3");
    }
    ecc_encode(data, spec)
}

fn encode_with(field: &Field, data: &[u8], spec: &GeneratorSpec) -> Result<Codeword> {
    let q = spec.q();
    if let Some(s) = data.iter().find(|&&s| s >= q) {
        return domain(format!("symbol {s} not below q = {q}"));
    }
    if let Some(k) = spec.fixed_k() {
        if data.len() != k {
            return domain(format!("data length {} does not match k = {k}", data.len()));
        }
    }
    match spec {
        GeneratorSpec::Identity { .. } => Ok(Codeword::new(data.to_vec())),
        GeneratorSpec::Matrix { rows, .. } => {
            let n = rows[0].len();
            let mut out = vec![0u8; n];
            for (d, row) in data.iter().zip(rows) {
                if *d == 0 {
                    continue;
                }
                for (o, g) in out.iter_mut().zip(row) {
                    *o = field.add(*o, field.mul(*d, *g));
                }
            }
            Ok(Codeword::new(out))
        }
        GeneratorSpec::Polynomial { coeffs, .. } => {
            if data.is_empty() {
                return domain("empty data string");
            }
            let r = coeffs.len() - 1;
            // long division of data·x^r by the monic generator
            let mut work: Vec<u8> = data.iter().copied().chain(std::iter::repeat_n(0, r)).collect();
            for i in 0..data.len() {
                let lead = work[i];
                if lead == 0 {
                    continue;
                }
                for (j, &g) in coeffs.iter().enumerate().skip(1) {
                    work[i + j] = field.sub(work[i + j], field.mul(lead, g));
                }
            }
            let mut out = data.to_vec();
            out.extend(work[data.len()..].iter().copied());
            Ok(Codeword::new(out))
        }
    }
}

/// Enumerates all `q^k` data strings through `spec` and verifies the result.
pub fn build_codebook(spec: &GeneratorSpec, k: usize, name: &str) -> Result<Codebook> {
    let q = spec.q();
    let field = Field::new(q as u16)?;
    spec.validate(&field)?;
    if let Some(fixed) = spec.fixed_k() {
        if fixed != k {
            return Err(Error::Config(format!("generator has k = {fixed}, requested {k}")));
        }
    }
    if k == 0 {
        return domain("k must be positive");
    }
    let count = (q as usize)
        .checked_pow(k as u32)
        .filter(|&c| c <= 1 << 20)
        .ok_or_else(|| Error::Domain(format!("q^k = {q}^{k} is too large to enumerate")))?;
    let words = (0..count)
        .map(|i| encode_with(&field, &data_symbols(i, k, q), spec))
        .collect::<Result<Vec<_>>>()?;
    Codebook::new(name, spec.n_for(k), k, q, words)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_malformed() {
        assert!(GeneratorSpec::parse("").is_err());
        assert!(GeneratorSpec::parse("3 1 2").is_err());
        assert!(GeneratorSpec::parse("3 1 2 matrix\n1 1").is_err());
        assert!(GeneratorSpec::parse("3 1 2 blob\n1 1 1").is_err());
        assert!(GeneratorSpec::parse("3 1 2 poly\n1 1").is_err());
        assert!(GeneratorSpec::parse("3 1 2 matrix\n1 1 2").is_err());
    }

    #[test]
    fn repetition_from_matrix() {
        let (n, k, spec) = GeneratorSpec::parse("# rep\n3 1 2 matrix\n1 1 1\n").unwrap();
        assert_eq!((n, k), (3, 1));
        let book = build_codebook(&spec, k, "rep").unwrap();
        assert_eq!(book.d_min(), 3);
    }

    #[test]
    fn rank_deficient_matrix_rejected() {
        let spec = GeneratorSpec::Matrix {
            q: 2,
            rows: vec![vec![1, 0, 1], vec![1, 0, 1]],
        };
        assert!(matches!(build_codebook(&spec, 2, "bad"), Err(Error::Construction(_))));
    }

    #[test]
    fn polynomial_code_remainder_divides() {
        // x^3 + x + 1 Hamming (7,4)
        let spec = GeneratorSpec::Polynomial { q: 2, coeffs: vec![1, 0, 1, 1] };
        let book = build_codebook(&spec, 4, "ham7").unwrap();
        assert_eq!((book.n(), book.k(), book.d_min()), (7, 4, 3));
        assert!(book.is_systematic());
    }

    #[test]
    fn encode_length_mismatch() {
        let spec = GeneratorSpec::Identity { k: 3, q: 2 };
        assert!(matches!(ecc_encode(&[1, 0], &spec), Err(Error::Domain(_))));
        assert!(matches!(ecc_encode(&[1, 0, 2], &spec), Err(Error::Domain(_))));
        assert!(nary_encode(&[1, 0, 1], &spec).is_err());
    }
}
