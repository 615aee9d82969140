use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

impl Season {
    fn index(self) -> usize {
        match self {
            Season::Spring => 0,
            Season::Summer => 1,
            Season::Autumn => 2,
            Season::Winter => 3,
        }
    }
}

/// Seasons are fixed calendar ranges: spring Mar 8 – Jun 7, summer Jun 8 –
/// Sep 7, autumn Sep 8 – Dec 7, winter Dec 8 – Mar 7.
pub fn season_of(date: NaiveDate) -> Season {
    let md = (date.month(), date.day());
    if ((3, 8)..=(6, 7)).contains(&md) {
        Season::Spring
    } else if ((6, 8)..=(9, 7)).contains(&md) {
        Season::Summer
    } else if ((9, 8)..=(12, 7)).contains(&md) {
        Season::Autumn
    } else {
        Season::Winter
    }
}

/// Christmas Eve, Independence Day and Thanksgiving (4th Thursday of
/// November). Every other public holiday counts as a regular day.
pub fn is_holiday(date: NaiveDate) -> bool {
    match (date.month(), date.day()) {
        (12, 24) | (7, 4) => true,
        (11, d) => {
            date.weekday() == Weekday::Thu && (22..=28).contains(&d)
        }
        _ => false,
    }
}

/// Season / weekday / holiday one-hot codes for one calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalendarCode {
    pub season: Season,
    pub weekend: bool,
    pub holiday: bool,
}

impl CalendarCode {
    /// `[spring, summer, autumn, winter]`
    pub fn season_one_hot(&self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self.season.index()] = 1.0;
        v
    }

    /// `[weekday, weekend]`
    pub fn weekday_one_hot(&self) -> [f64; 2] {
        if self.weekend {
            [0.0, 1.0]
        } else {
            [1.0, 0.0]
        }
    }

    /// `[holiday, non-holiday]`
    pub fn holiday_one_hot(&self) -> [f64; 2] {
        if self.holiday {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    }
}

pub fn calendar_code(date: NaiveDate) -> CalendarCode {
    CalendarCode {
        season: season_of(date),
        weekend: matches!(date.weekday(), Weekday::Sat | Weekday::Sun),
        holiday: is_holiday(date),
    }
}
