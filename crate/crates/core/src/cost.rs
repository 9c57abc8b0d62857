//! Exact edge costs.
//!
//! Costs are rationals with 64-bit numerator and denominator. Serialized form is
//! the usual `"p"` / `"p/q"` string, so documents stay exact.

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub type Cost = Ratio<i64>;

/// Parses `"3"`, `"-1"`, `"5/2"`; also accepts plain decimals like `"2.5"`.
pub fn parse_cost(text: &str) -> Result<Cost> {
    let text = text.trim();
    if let Ok(r) = text.parse::<Ratio<i64>>() {
        return Ok(r);
    }
    if let Some((int, frac)) = text.split_once('.') {
        if !frac.is_empty() && frac.len() <= 12 && frac.bytes().all(|b| b.is_ascii_digit()) {
            let negative = int.starts_with('-');
            let int_abs = int.trim_start_matches(['-', '+']);
            let whole: i64 = if int_abs.is_empty() {
                0
            } else {
                int_abs
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad cost {text:?}")))?
            };
            let denom = 10i64.pow(frac.len() as u32);
            let num: i64 = frac.parse().unwrap_or(0);
            let value = Ratio::new(whole * denom + num, denom);
            return Ok(if negative { -value } else { value });
        }
    }
    Err(Error::Malformed(format!("bad cost {text:?}")))
}

pub fn is_negative(c: &Cost) -> bool {
    c.is_negative()
}

pub fn sum<'a>(costs: impl IntoIterator<Item = &'a Cost>) -> Cost {
    costs.into_iter().fold(Cost::zero(), |acc, c| acc + c)
}

pub fn to_f64(c: &Cost) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

pub(crate) mod serde_str {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Cost;

    pub fn serialize<S: Serializer>(c: &Cost, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(c)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Cost, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_cost(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_str_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Cost;

    pub fn serialize<S: Serializer>(c: &Option<Cost>, s: S) -> Result<S::Ok, S::Error> {
        match c {
            Some(c) => s.collect_str(c),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Cost>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| super::parse_cost(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}
