//! Sweep axes: `start:stop:count`, with an optional `:log` suffix for
//! geometric spacing.

use std::str::FromStr;

use premq::verify::{linspace, logspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Rho,
    K,
    Cost,
    Phi,
}

impl SweepParam {
    fn check(self, value: f64) -> Result<(), String> {
        let ok = match self {
            SweepParam::Rho => value > 0.0 && value < 1.0,
            SweepParam::K => value >= 1.0 && value.is_finite(),
            SweepParam::Cost => value >= 0.0 && value.is_finite(),
            SweepParam::Phi => (0.0..=1.0).contains(&value),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{value} is outside the valid range for {self:?}"))
        }
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rho" => Ok(SweepParam::Rho),
            "k" => Ok(SweepParam::K),
            "cost" => Ok(SweepParam::Cost),
            "phi" => Ok(SweepParam::Phi),
            other => Err(format!(
                "unknown sweep parameter `{other}` (rho, k, cost, phi)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.log {
            logspace(self.start, self.stop, self.count)
        } else {
            linspace(self.start, self.stop, self.count)
        }
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let (nums, log) = match parts.as_slice() {
            [a, b, n] => ([*a, *b, *n], false),
            [a, b, n, "log"] => ([*a, *b, *n], true),
            [a, b, n, "lin"] => ([*a, *b, *n], false),
            _ => return Err(format!("expected start:stop:count[:log], got `{s}`")),
        };
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let count: usize = nums[2]
            .parse()
            .map_err(|e| format!("count `{}`: {e}", nums[2]))?;
        let range = Range {
            start: num(nums[0])?,
            stop: num(nums[1])?,
            count,
            log,
        };
        if range.count < 2 {
            return Err(format!("count must be at least 2, got {}", range.count));
        }
        if log && !(range.start > 0.0 && range.stop > 0.0) {
            return Err("log spacing needs positive endpoints".into());
        }
        Ok(range)
    }
}

/// `name=start:stop:count[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub range: Range,
}

impl Axis {
    pub fn validate(&self) -> Result<(), String> {
        self.param.check(self.range.start)?;
        self.param.check(self.range.stop)
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, range) = s
            .split_once('=')
            .ok_or_else(|| format!("expected name=start:stop:count, got `{s}`"))?;
        Ok(Axis {
            param: name.trim().parse()?,
            range: range.trim().parse()?,
        })
    }
}

/// Validated set of axes; remaining parameters come from fixed values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
}

impl SweepSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self, String> {
        if axes.is_empty() {
            return Err("at least one --axis is required".into());
        }
        for (i, a) in axes.iter().enumerate() {
            a.validate()?;
            if axes[..i].iter().any(|b| b.param == a.param) {
                return Err(format!("axis {:?} given twice", a.param));
            }
        }
        Ok(SweepSpec { axes })
    }

    pub fn values_of(&self, param: SweepParam) -> Option<Vec<f64>> {
        self.axes
            .iter()
            .find(|a| a.param == param)
            .map(|a| a.range.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        let r: Range = "1e-4:0.99:200".parse().unwrap();
        assert_eq!((r.start, r.stop, r.count, r.log), (1e-4, 0.99, 200, false));
        let r: Range = "1:1000:4:log".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 4);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!("1:2".parse::<Range>().is_err());
        assert!("1:2:1".parse::<Range>().is_err());
        assert!("0:1:5:log".parse::<Range>().is_err());
    }

    #[test]
    fn validates_axes() {
        let a: Axis = "rho=0.1:0.9:5".parse().unwrap();
        assert_eq!(a.param, SweepParam::Rho);
        assert!(a.validate().is_ok());
        assert!("rho=0.1:1.0:5".parse::<Axis>().unwrap().validate().is_err());
        assert!("k=0.5:3:5".parse::<Axis>().unwrap().validate().is_err());
        assert!("mu=1:2:3".parse::<Axis>().is_err());
        let twice = vec![a, a];
        assert!(SweepSpec::new(twice).is_err());
    }
}
