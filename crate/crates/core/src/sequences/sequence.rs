use crate::error::{Error, Result};

/// First value of a power family; `1^{−a} = 1` is pulled inside `(0, 1)`.
pub const CLAMPED_FIRST: f64 = 1.0 - 1e-9;

/// Upper bound on the length of materialised sequences.
pub const MAX_EXPLICIT_LEN: usize = 10_000_000;

/// A strictly decreasing sequence `t_1 > t_2 > … ` in `(0, 1)`, indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSequence {
    Explicit {
        values: Vec<f64>,
        /// `t_n − t_{n+1}` nonincreasing (up to rounding of the differences).
        gaps_decreasing: bool,
    },
    /// `t_n = n^{−a}` for `n ≥ 2`, `t_1 = 1 − 10⁻⁹`; gaps are decreasing by
    /// convexity.
    Power { exponent: f64, length: u64 },
}

impl TimeSequence {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSequence("empty".into()));
        }
        if values.len() > MAX_EXPLICIT_LEN {
            return Err(Error::InvalidSequence(format!(
                "{} values exceed the cap of {MAX_EXPLICIT_LEN}",
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidSequence(format!("t_{} = {v} is outside (0, 1)", i + 1)));
            }
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] >= w[0] {
                return Err(Error::InvalidSequence(format!(
                    "not strictly decreasing at n = {}: {} then {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        let gaps_decreasing = values.windows(3).all(|w| {
            let g0 = w[0] - w[1];
            let g1 = w[1] - w[2];
            g1 <= g0 + super::gap_tolerance(w[0])
        });
        Ok(TimeSequence::Explicit { values, gaps_decreasing })
    }

    pub fn power(exponent: f64, length: u64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidSequence(format!("power exponent must be positive, got {exponent}")));
        }
        if length == 0 {
            return Err(Error::InvalidSequence("length must be at least 1".into()));
        }
        Ok(TimeSequence::Power { exponent, length })
    }

    /// One value per line; blank lines and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line
                .trim_end_matches(',')
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: i + 1, reason: format!("`{line}`: {e}") })?;
            values.push(v);
        }
        Self::explicit(values)
    }

    /// Parses `power:a=2[,length=N]`. The default length is 10¹².
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
        match family.trim() {
            "power" => {
                let mut a = None;
                let mut length = 1_000_000_000_000u64;
                for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::InvalidSequence(format!("expected key=value, got `{kv}`")))?;
                    match k.trim() {
                        "a" => {
                            a = Some(v.trim().parse::<f64>().map_err(|e| {
                                Error::InvalidSequence(format!("bad exponent `{v}`: {e}"))
                            })?)
                        }
                        "length" => {
                            length = parse_count(v.trim())
                                .ok_or_else(|| Error::InvalidSequence(format!("bad length `{v}`")))?
                        }
                        other => return Err(Error::InvalidSequence(format!("unknown key `{other}`"))),
                    }
                }
                let a = a.ok_or_else(|| Error::InvalidSequence("power family needs `a`".into()))?;
                Self::power(a, length)
            }
            other => Err(Error::InvalidSequence(format!("unknown family `{other}`"))),
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            TimeSequence::Explicit { values, .. } => values.len() as u64,
            TimeSequence::Power { length, .. } => *length,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gaps_decreasing(&self) -> bool {
        match self {
            TimeSequence::Explicit { gaps_decreasing, .. } => *gaps_decreasing,
            TimeSequence::Power { .. } => true,
        }
    }

    /// `t_n` for `1 ≤ n ≤ len`.
    pub fn value(&self, n: u64) -> f64 {
        debug_assert!(n >= 1 && n <= self.len());
        match self {
            TimeSequence::Explicit { values, .. } => values[(n - 1) as usize],
            TimeSequence::Power { exponent, .. } => {
                if n == 1 {
                    CLAMPED_FIRST
                } else {
                    1.0 / (n as f64).powf(*exponent)
                }
            }
        }
    }

    /// `t_n` for `n` in `first..=last`, clipped to the sequence length.
    pub fn values(&self, first: u64, last: u64) -> Vec<f64> {
        let last = last.min(self.len());
        (first.max(1)..=last).map(|n| self.value(n)).collect()
    }

    /// Largest `n` with `pred(t_n)`, or 0 if there is none. `pred` must be
    /// monotone: true on large values, false on small ones. `hint` is a value
    /// near the switch, used by the closed-form inverse of analytic families.
    pub fn last_index_where(&self, hint: f64, pred: impl Fn(f64) -> bool) -> u64 {
        let len = self.len();
        let holds = |n: u64| n == 0 || pred(self.value(n));
        // Bracket [lo, hi) with holds(lo) and !holds(hi) (hi may be len + 1).
        let (mut lo, mut hi) = match self {
            TimeSequence::Explicit { .. } => (0, len + 1),
            TimeSequence::Power { exponent, .. } => {
                let guess = if hint > 0.0 { hint.powf(-1.0 / exponent).floor() } else { f64::INFINITY };
                let guess = if guess.is_finite() { (guess as u64).min(len) } else { len };
                let mut step = 1u64;
                if holds(guess) {
                    let mut lo = guess;
                    loop {
                        let next = lo.saturating_add(step);
                        if next > len {
                            break (lo, len + 1);
                        }
                        if !holds(next) {
                            break (lo, next);
                        }
                        lo = next;
                        step = step.saturating_mul(2);
                    }
                } else {
                    let mut hi = guess;
                    loop {
                        let next = hi.saturating_sub(step);
                        if holds(next) {
                            break (next, hi);
                        }
                        hi = next;
                        step = step.saturating_mul(2);
                    }
                }
            }
        };
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if holds(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `#{n : t_n > b}`.
    pub fn count_greater(&self, b: f64) -> u64 {
        self.last_index_where(b, |t| t > b)
    }
}

fn parse_count(s: &str) -> Option<u64> {
    if let Ok(n) = s.parse::<u64>() {
        return Some(n);
    }
    // Accept `1e6`-style lengths when they are exact integers.
    let v = s.parse::<f64>().ok()?;
    (v >= 1.0 && v.fract() == 0.0 && v < 1.8e19).then_some(v as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_validation() {
        assert!(TimeSequence::explicit(vec![0.5, 0.5]).is_err());
        assert!(TimeSequence::explicit(vec![1.0, 0.5]).is_err());
        assert!(TimeSequence::explicit(vec![0.5, 0.0]).is_err());
        assert!(TimeSequence::explicit(vec![]).is_err());
        let s = TimeSequence::explicit(vec![0.9, 0.8, 0.5]).unwrap();
        assert!(!s.gaps_decreasing());
        let s = TimeSequence::explicit(vec![0.9, 0.5, 0.3, 0.2]).unwrap();
        assert!(s.gaps_decreasing());
    }

    #[test]
    fn power_values() {
        let s = TimeSequence::power(2.0, 2000).unwrap();
        assert_eq!(s.value(1), CLAMPED_FIRST);
        assert_eq!(s.value(1000), 1e-6);
        assert_eq!(s.value(4), 0.0625);
    }

    #[test]
    fn count_greater_matches_scan() {
        let p = TimeSequence::power(2.0, 5000).unwrap();
        let e = TimeSequence::explicit(p.values(1, 5000)).unwrap();
        for b in [0.9, 0.5, 0.25, 1e-3, 1e-6, 4e-8, 3.9e-8, 1e-9] {
            let scan = (1..=5000).filter(|&n| p.value(n) > b).count() as u64;
            assert_eq!(p.count_greater(b), scan, "b = {b}");
            assert_eq!(e.count_greater(b), scan, "b = {b}");
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(TimeSequence::parse_spec("power:a=2").unwrap().len(), 1_000_000_000_000);
        let s = TimeSequence::parse_spec("power:a=3,length=1e6").unwrap();
        assert_eq!(s, TimeSequence::Power { exponent: 3.0, length: 1_000_000 });
        assert!(TimeSequence::parse_spec("power:b=3").is_err());
        assert!(TimeSequence::parse_spec("geometric:a=3").is_err());
    }

    #[test]
    fn csv_loading() {
        let s = TimeSequence::from_csv("# times\n0.5\n0.25\n\n0.125\n").unwrap();
        assert_eq!(s.len(), 3);
        assert!(TimeSequence::from_csv("0.5\n0.6\n").is_err());
        assert!(matches!(TimeSequence::from_csv("0.5\nx\n"), Err(Error::Parse { line: 2, .. })));
    }
}
