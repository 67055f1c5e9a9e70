//! Angles written as decimal radians (`2.0333`) or as rational multiples of
//! π (`233pi/360`, `-pi/2`, `0.5pi`, `2*pi/3`, `π`).

use std::f64::consts::PI;

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s = text.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || format!("cannot read {text:?} as an angle");
    let value = match s.split_once("pi") {
        None => s.parse::<f64>().map_err(|_| bad())?,
        Some((coef, rest)) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let c = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let rest = rest.trim();
            if rest.is_empty() {
                c * PI
            } else {
                let d = rest
                    .strip_prefix('/')
                    .ok_or_else(bad)?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad())?;
                if d == 0.0 {
                    return Err(bad());
                }
                c * PI / d
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}
