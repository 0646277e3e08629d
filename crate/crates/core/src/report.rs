//! Serialization of reports: JSON with 17 significant digits and flat CSV.

use std::io::Write;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;

fn reformat(value: &mut Value) -> Result<()> {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("float");
                if x.is_finite() {
                    *n = serde_json::from_str::<Number>(&format!("{x:.16e}"))?;
                }
            }
        }
        Value::Array(items) => {
            for v in items {
                reformat(v)?;
            }
        }
        Value::Object(map) => {
            for v in map.values_mut() {
                reformat(v)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// JSON value with every non-integer number written as `d.ddddddddddddddddde±x`.
/// Integers stay integers; NaN and infinities become `null`.
pub fn to_json_value<S: Serialize + ?Sized>(value: &S) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    reformat(&mut v)?;
    Ok(v)
}

pub fn to_json_pretty<S: Serialize + ?Sized>(value: &S) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_json_value(value)?)?)
}

/// One CSV line per row with a header from the field names.
pub fn write_csv<W: Write, S: Serialize>(out: W, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seventeen_digits() {
        let v = to_json_value(&json!({"a": 0.1, "n": 63, "z": 0.0, "list": [1.5e-300, -2.0]})).unwrap();
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(
            text,
            r#"{"a":1.0000000000000001e-1,"list":[1.5000000000000001e-300,-2.0000000000000000e+0],"n":63,"z":0.0000000000000000e+0}"#
        );
        let back: f64 = v["a"].as_f64().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn non_finite_is_null() {
        #[derive(Serialize)]
        struct S {
            x: f64,
        }
        let v = to_json_value(&S { x: f64::NAN }).unwrap();
        assert!(v["x"].is_null());
    }
}
