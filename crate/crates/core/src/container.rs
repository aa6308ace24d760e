//! Self-describing JSON container for channels, equalizers and estimates.
//!
//! ```text
//! { "format": "modeloss-container", "version": 1, "kind": "<kind>", "body": { ... } }
//! ```
//!
//! Complex matrices are stored as `{"rows": r, "cols": c, "data": [re, im, ...]}`
//! in row-major order. Doubles are written in shortest round-trip form, so a
//! load/save cycle reproduces the file byte for byte.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ChannelSpectrum;
use crate::dsp::{EqualizerSolution, MdlEstimate};

pub const FORMAT: &str = "modeloss-container";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed container: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a {FORMAT} file (format `{0}`)")]
    WrongFormat(String),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("expected a `{expected}` container, found `{found}`")]
    WrongKind {
        expected: &'static str,
        found: String,
    },
    #[error("container body failed validation: {0}")]
    Invalid(String),
}

pub trait ContainerItem: Serialize + DeserializeOwned {
    const KIND: &'static str;

    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

impl ContainerItem for ChannelSpectrum {
    const KIND: &'static str = "channel-spectrum";

    fn check(&self) -> Result<(), String> {
        self.validate().map_err(|e| e.to_string())
    }
}

impl ContainerItem for EqualizerSolution {
    const KIND: &'static str = "equalizer-solution";
}

impl ContainerItem for MdlEstimate {
    const KIND: &'static str = "mdl-estimate";
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    format: &'a str,
    version: u32,
    kind: &'a str,
    body: &'a T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
    kind: String,
}

#[derive(Deserialize)]
struct Owned<T> {
    body: T,
}

pub fn to_string<T: ContainerItem>(item: &T) -> Result<String, ContainerError> {
    let mut s = serde_json::to_string(&Envelope {
        format: FORMAT,
        version: VERSION,
        kind: T::KIND,
        body: item,
    })?;
    s.push('\n');
    Ok(s)
}

/// Kind tag of a container without decoding the body.
pub fn peek_kind(s: &str) -> Result<String, ContainerError> {
    let h: Header = serde_json::from_str(s)?;
    if h.format != FORMAT {
        return Err(ContainerError::WrongFormat(h.format));
    }
    if h.version != VERSION {
        return Err(ContainerError::UnsupportedVersion(h.version));
    }
    Ok(h.kind)
}

pub fn from_str<T: ContainerItem>(s: &str) -> Result<T, ContainerError> {
    let kind = peek_kind(s)?;
    if kind != T::KIND {
        return Err(ContainerError::WrongKind {
            expected: T::KIND,
            found: kind,
        });
    }
    let owned: Owned<T> = serde_json::from_str(s)?;
    owned.body.check().map_err(ContainerError::Invalid)?;
    Ok(owned.body)
}

pub fn save<T: ContainerItem>(item: &T, path: impl AsRef<Path>) -> Result<(), ContainerError> {
    std::fs::write(path, to_string(item)?)?;
    Ok(())
}

pub fn load<T: ContainerItem>(path: impl AsRef<Path>) -> Result<T, ContainerError> {
    from_str(&std::fs::read_to_string(path)?)
}

/// serde adapter for `Vec<CMat>`.
pub(crate) mod matrix_list {
    use num_complex::Complex64;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::CMat;

    #[derive(Serialize, Deserialize)]
    struct Matrix {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Matrix> = ms
            .iter()
            .map(|m| {
                let mut data = Vec::with_capacity(2 * m.len());
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        data.push(m[(r, c)].re);
                        data.push(m[(r, c)].im);
                    }
                }
                Matrix {
                    rows: m.nrows(),
                    cols: m.ncols(),
                    data,
                }
            })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        let raw = Vec::<Matrix>::deserialize(d)?;
        raw.into_iter()
            .map(|m| {
                if m.data.len() != 2 * m.rows * m.cols {
                    return Err(D::Error::custom(format!(
                        "matrix {}x{} carries {} doubles",
                        m.rows,
                        m.cols,
                        m.data.len()
                    )));
                }
                Ok(CMat::from_fn(m.rows, m.cols, |r, c| {
                    let k = 2 * (r * m.cols + c);
                    Complex64::new(m.data[k], m.data[k + 1])
                }))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synthesize_link, LinkSpec, ModeLayout};
    use crate::linalg::CMat;
    use num_complex::Complex64;

    #[test]
    fn channel_round_trip_is_byte_exact() {
        let ch = synthesize_link(&LinkSpec {
            bins: 8,
            sections: 3,
            ..LinkSpec::default()
        })
        .unwrap();
        let a = to_string(&ch).unwrap();
        let back: ChannelSpectrum = from_str(&a).unwrap();
        assert_eq!(back, ch);
        assert_eq!(to_string(&back).unwrap(), a);
    }

    #[test]
    fn row_major_layout() {
        let m = CMat::from_fn(2, 2, |r, c| Complex64::new((2 * r + c) as f64, -1.0));
        let ch = ChannelSpectrum::new(
            ModeLayout {
                spatial_modes: vec!["A".into(), "B".into()],
                polarizations: 1,
            },
            1.0,
            vec![m],
        )
        .unwrap();
        let s = to_string(&ch).unwrap();
        assert!(
            s.contains(r#""data":[0.0,-1.0,1.0,-1.0,2.0,-1.0,3.0,-1.0]"#),
            "{s}"
        );
        assert!(s.starts_with(
            r#"{"format":"modeloss-container","version":1,"kind":"channel-spectrum""#
        ));
    }

    #[test]
    fn rejects_wrong_kind_and_format() {
        let ch = synthesize_link(&LinkSpec {
            bins: 2,
            sections: 1,
            ..LinkSpec::default()
        })
        .unwrap();
        let s = to_string(&ch).unwrap();
        assert!(matches!(
            from_str::<MdlEstimate>(&s),
            Err(ContainerError::WrongKind { .. })
        ));
        let bad = s.replace(FORMAT, "other");
        assert!(matches!(
            from_str::<ChannelSpectrum>(&bad),
            Err(ContainerError::WrongFormat(_))
        ));
        let v2 = s.replace(r#""version":1"#, r#""version":2"#);
        assert!(matches!(
            from_str::<ChannelSpectrum>(&v2),
            Err(ContainerError::UnsupportedVersion(2))
        ));
    }

    #[test]
    fn rejects_inconsistent_matrices() {
        let s = r#"{"format":"modeloss-container","version":1,"kind":"channel-spectrum","body":{"layout":{"spatial_modes":["A","B"],"polarizations":1},"bin_spacing_hz":1.0,"bins":[{"rows":2,"cols":2,"data":[1.0,0.0]}]}}"#;
        assert!(matches!(
            from_str::<ChannelSpectrum>(s),
            Err(ContainerError::Json(_))
        ));
        let s = r#"{"format":"modeloss-container","version":1,"kind":"channel-spectrum","body":{"layout":{"spatial_modes":["A","B"],"polarizations":1},"bin_spacing_hz":1.0,"bins":[{"rows":1,"cols":1,"data":[1.0,0.0]}]}}"#;
        assert!(matches!(
            from_str::<ChannelSpectrum>(s),
            Err(ContainerError::Invalid(_))
        ));
    }
}
