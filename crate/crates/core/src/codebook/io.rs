//! Versioned JSON codebook files.
//!
//! The canonical form is compact JSON with a trailing newline; `to_json(from_json(s))`
//! reproduces `s` byte for byte whenever `s` is canonical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Codebook, Codeword, Layout};
use crate::error::{Error, Result};
use crate::scaling::ScalingParams;

pub const CODEBOOK_FORMAT: &str = "dnaexp-codebook";
pub const CODEBOOK_VERSION: u32 = 1;

#[derive(Serialize)]
struct FileOut<'a> {
    format: &'a str,
    version: u32,
    scaling: &'a ScalingParams,
    layout: Layout,
    codewords: &'a [Codeword],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    format: String,
    version: u32,
    scaling: ScalingParams,
    layout: Layout,
    codewords: Vec<Codeword>,
}

pub fn to_json(cb: &Codebook) -> String {
    let out = FileOut {
        format: CODEBOOK_FORMAT,
        version: CODEBOOK_VERSION,
        scaling: &cb.scaling,
        layout: cb.layout,
        codewords: &cb.codewords,
    };
    let mut s = serde_json::to_string(&out).expect("codebook serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<Codebook> {
    let f: FileIn = serde_json::from_str(text)?;
    if f.format != CODEBOOK_FORMAT {
        return Err(Error::Format(format!("unexpected format tag {:?}", f.format)));
    }
    if f.version != CODEBOOK_VERSION {
        return Err(Error::Format(format!("unsupported version {}", f.version)));
    }
    Codebook::new(f.scaling, f.layout, f.codewords)
}

pub fn save(cb: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(cb))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Codebook> {
    from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::greedy_index_codebook;
    use crate::scaling::MessageSpec;
    use proptest::prelude::*;

    #[test]
    fn rejects_foreign_files() {
        let s = ScalingParams::new(2, 4, 3, MessageSpec::Count { j: 2 }).unwrap();
        let cb = greedy_index_codebook(&s, 1, 3, 1, 100).unwrap();
        let text = to_json(&cb);
        assert!(from_json(&text.replace("dnaexp-codebook", "other")).is_err());
        assert!(from_json(&text.replace("\"version\":1", "\"version\":9")).is_err());
        assert!(from_json("{}").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_is_bit_exact(
            m in 2u32..10,
            per_group in 2u64..6,
            j in 1usize..30,
            seed in any::<u64>(),
            p in 0.0f64..0.99,
            log_j in 0.0f64..1e6,
        ) {
            let messages = if seed % 2 == 0 { MessageSpec::LogCount { log_j } } else { MessageSpec::Count { j: j as u64 } };
            let s = ScalingParams::new(m, m as u64 * per_group, 2 * m, messages).unwrap().with_p_seq(p).unwrap();
            let cb = match greedy_index_codebook(&s, m, j, seed, 10_000) {
                Ok(cb) => cb,
                Err(Error::Shortfall { partial, .. }) => *partial,
                Err(e) => panic!("{e}"),
            };
            let text = to_json(&cb);
            let back = from_json(&text).unwrap();
            prop_assert_eq!(&back, &cb);
            prop_assert_eq!(to_json(&back), text);
        }
    }
}
