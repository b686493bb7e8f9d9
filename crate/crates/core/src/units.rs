//! Unit newtypes. Conversions between mph and SI happen only through `From`.

use serde::{Deserialize, Serialize};

pub const MPS_PER_MPH: f64 = 0.44704;

macro_rules! unit {
    ($name:ident, $sym:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{} {}", self.0, $sym)
            }
        }

        impl std::ops::Add for $name {
            type Output = $name;
            fn add(self, o: $name) -> $name {
                $name(self.0 + o.0)
            }
        }

        impl std::ops::Sub for $name {
            type Output = $name;
            fn sub(self, o: $name) -> $name {
                $name(self.0 - o.0)
            }
        }
    };
}

unit!(Metres, "m");
unit!(Seconds, "s");
unit!(MetresPerSecond, "m/s");
unit!(Mph, "mph");

impl From<Mph> for MetresPerSecond {
    fn from(v: Mph) -> Self {
        MetresPerSecond(v.0 * MPS_PER_MPH)
    }
}

impl From<MetresPerSecond> for Mph {
    fn from(v: MetresPerSecond) -> Self {
        Mph(v.0 / MPS_PER_MPH)
    }
}

impl std::ops::Mul<Seconds> for MetresPerSecond {
    type Output = Metres;
    fn mul(self, t: Seconds) -> Metres {
        Metres(self.0 * t.0)
    }
}

impl std::ops::Div<MetresPerSecond> for Metres {
    type Output = Seconds;
    fn div(self, v: MetresPerSecond) -> Seconds {
        Seconds(self.0 / v.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mph_round_trip() {
        let v: MetresPerSecond = Mph(25.0).into();
        assert!((v.0 - 11.176).abs() < 1e-12);
        let back: Mph = v.into();
        assert!((back.0 - 25.0).abs() < 1e-12);
    }

    #[test]
    fn dimensional_products() {
        let d = MetresPerSecond(10.0) * Seconds(2.0);
        assert_eq!(d, Metres(20.0));
        assert_eq!(d / MetresPerSecond(4.0), Seconds(5.0));
    }
}
