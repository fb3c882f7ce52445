use core::fmt;

/// A calendar quarter. Survey rounds and macro observations are keyed by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    year: i32,
    q: u8,
}

impl Quarter {
    /// `q` must be in `1..=4`.
    pub fn new(year: i32, q: u8) -> Option<Self> {
        (1..=4).contains(&q).then_some(Self { year, q })
    }

    /// Quarter containing the given month (1-based).
    pub fn from_month(year: i32, month: u32) -> Option<Self> {
        if !(1..=12).contains(&month) {
            return None;
        }
        Some(Self {
            year,
            q: ((month - 1) / 3 + 1) as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.q
    }

    /// First month of the quarter (1, 4, 7 or 10).
    pub fn start_month(self) -> u32 {
        (self.q as u32 - 1) * 3 + 1
    }

    fn index(self) -> i64 {
        self.year as i64 * 4 + (self.q as i64 - 1)
    }

    fn from_index(i: i64) -> Self {
        Self {
            year: i.div_euclid(4) as i32,
            q: (i.rem_euclid(4) + 1) as u8,
        }
    }

    pub fn offset(self, quarters: i64) -> Self {
        Self::from_index(self.index() + quarters)
    }

    /// Signed number of quarters from `self` to `other`.
    pub fn quarters_until(self, other: Quarter) -> i64 {
        other.index() - self.index()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-Q{}", self.year, self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_wrap_years() {
        let q = Quarter::new(2023, 4).unwrap();
        assert_eq!(q.offset(1), Quarter::new(2024, 1).unwrap());
        assert_eq!(q.offset(-4), Quarter::new(2022, 4).unwrap());
        assert_eq!(
            Quarter::new(-1, 1).unwrap().offset(-1),
            Quarter::new(-2, 4).unwrap()
        );
        assert_eq!(q.quarters_until(q.offset(7)), 7);
    }

    #[test]
    fn months_snap_to_quarters() {
        assert_eq!(
            Quarter::from_month(2024, 6).unwrap(),
            Quarter::new(2024, 2).unwrap()
        );
        assert_eq!(Quarter::from_month(2024, 7).unwrap().start_month(), 7);
        assert!(Quarter::from_month(2024, 13).is_none());
        assert!(Quarter::new(2024, 0).is_none());
    }
}
