//! Number formatting shared by the CSV writers.

use serde::{Deserialize, Serialize};

/// How floating-point values are printed in CSV output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum NumberFormat {
    /// 17 significant digits; parses back to the identical `f64`.
    #[default]
    Full,
    /// Fixed number of decimals, for comparing against printed tables.
    Rounded(usize),
}

impl NumberFormat {
    pub fn fmt(&self, x: f64) -> String {
        match self {
            NumberFormat::Full => format!("{x:.16e}"),
            NumberFormat::Rounded(decimals) => {
                let s = format!("{x:.decimals$}");
                // avoid "-0.0000"
                if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
                    s[1..].to_string()
                } else {
                    s
                }
            }
        }
    }
}
