//! Time discretization shared by the model compiler and the feasibility
//! checker, so both read a timeline in exactly the same slots.

use std::ops::Range;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{AirlineConstraints, Cents, FlightOffer, HotelOffer, MinuteOfDay, TravelRequest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("slot length {0} min must be positive and divide a day")]
    BadSlotLength(u32),
}

pub fn minute_of_day(dt: NaiveDateTime) -> MinuteOfDay {
    (dt.hour() * 60 + dt.minute()) as MinuteOfDay
}

fn at_minute(date: NaiveDate, minute: MinuteOfDay) -> NaiveDateTime {
    date.and_time(NaiveTime::MIN) + Duration::minutes(i64::from(minute))
}

/// Overnight-flight definition: departs in `[depart_from, depart_until]`
/// (wrapping midnight) or lands in `[arrive_from, arrive_until]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedEyeRule {
    pub depart_from: MinuteOfDay,
    pub depart_until: MinuteOfDay,
    pub arrive_from: MinuteOfDay,
    pub arrive_until: MinuteOfDay,
}

impl Default for RedEyeRule {
    fn default() -> Self {
        RedEyeRule {
            depart_from: 21 * 60,
            depart_until: 4 * 60 + 59,
            arrive_from: 60,
            arrive_until: 5 * 60 + 59,
        }
    }
}

impl RedEyeRule {
    pub fn is_red_eye(&self, departure: NaiveDateTime, arrival: NaiveDateTime) -> bool {
        let d = minute_of_day(departure);
        let a = minute_of_day(arrival);
        let departs_late = if self.depart_from <= self.depart_until {
            (self.depart_from..=self.depart_until).contains(&d)
        } else {
            d >= self.depart_from || d <= self.depart_until
        };
        departs_late || (self.arrive_from..=self.arrive_until).contains(&a)
    }
}

/// Timeline semantics shared by model and checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rules {
    pub slot_minutes: u32,
    /// Evening window start, minutes after midnight of the night's date.
    pub evening_start: MinuteOfDay,
    /// Evening window end (exclusive), minutes after the following midnight.
    pub evening_end: MinuteOfDay,
    pub min_sleep_minutes: u32,
    pub red_eye: RedEyeRule,
    pub window_penalty_cents_per_minute: Cents,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            slot_minutes: 60,
            evening_start: 22 * 60,
            evening_end: 7 * 60,
            min_sleep_minutes: 6 * 60,
            red_eye: RedEyeRule::default(),
            window_penalty_cents_per_minute: 20,
        }
    }
}

impl Rules {
    pub fn with_slot_minutes(mut self, slot_minutes: u32) -> Self {
        self.slot_minutes = slot_minutes;
        self
    }

    /// Minimum sleep slots per night (`L`).
    pub fn min_sleep_slots(&self) -> usize {
        self.min_sleep_minutes.div_ceil(self.slot_minutes) as usize
    }

    /// Objective penalty of a flight under the request's soft windows.
    pub fn soft_penalty(&self, flight: &FlightOffer, air: &AirlineConstraints) -> Cents {
        let mut minutes = 0;
        if let Some(w) = air.departure_window.filter(|w| w.soft) {
            minutes += w.minutes_outside(minute_of_day(flight.departure));
        }
        if let Some(w) = air.arrival_window.filter(|w| w.soft) {
            minutes += w.minutes_outside(minute_of_day(flight.arrival));
        }
        minutes * self.window_penalty_cents_per_minute
    }
}

/// Departure and landing slots of a flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlightSlots {
    pub depart: usize,
    pub land: usize,
}

impl FlightSlots {
    /// Departure slot, an air slot, and landing slot must all be distinct.
    pub fn fits_grid(&self) -> bool {
        self.land >= self.depart + 2
    }
}

/// `T` equal slots starting at midnight of the first travel date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeGrid {
    pub slot_minutes: u32,
    pub start: NaiveDateTime,
    pub slots: usize,
    pub evening_start: MinuteOfDay,
    pub evening_end: MinuteOfDay,
}

impl TimeGrid {
    pub fn new(
        start_date: NaiveDate,
        end: NaiveDateTime,
        rules: &Rules,
    ) -> Result<TimeGrid, GridError> {
        let slot = rules.slot_minutes;
        if slot == 0 || 1440 % slot != 0 {
            return Err(GridError::BadSlotLength(slot));
        }
        let start = start_date.and_time(NaiveTime::MIN);
        let span = (end - start).num_minutes().max(0) as u64;
        Ok(TimeGrid {
            slot_minutes: slot,
            start,
            slots: span.div_ceil(u64::from(slot)) as usize,
            evening_start: rules.evening_start,
            evening_end: rules.evening_end,
        })
    }

    /// Grid over the travel span: from midnight of the first date through the
    /// end of the last date, extended by whole days until every arrival has a
    /// landing slot inside the grid.
    pub fn for_trip<'a>(
        request: &TravelRequest,
        flights: impl IntoIterator<Item = &'a FlightOffer>,
        rules: &Rules,
    ) -> Result<TimeGrid, GridError> {
        let mut end_date = request.last_date() + Duration::days(1);
        let pad = Duration::minutes(i64::from(rules.slot_minutes));
        for f in flights {
            let needed = f.arrival + pad;
            while end_date.and_time(NaiveTime::MIN) < needed {
                end_date += Duration::days(1);
            }
        }
        TimeGrid::new(request.first_date(), end_date.and_time(NaiveTime::MIN), rules)
    }

    fn offset_minutes(&self, dt: NaiveDateTime) -> i64 {
        (dt - self.start).num_minutes()
    }

    pub fn floor_slot(&self, dt: NaiveDateTime) -> i64 {
        self.offset_minutes(dt).div_euclid(i64::from(self.slot_minutes))
    }

    pub fn ceil_slot(&self, dt: NaiveDateTime) -> i64 {
        let s = i64::from(self.slot_minutes);
        (self.offset_minutes(dt) + s - 1).div_euclid(s)
    }

    fn clamp(&self, slot: i64) -> usize {
        slot.clamp(0, self.slots as i64) as usize
    }

    pub fn slot_start(&self, t: usize) -> NaiveDateTime {
        self.start + Duration::minutes(t as i64 * i64::from(self.slot_minutes))
    }

    /// Slot of departure (floor) and of landing (ceil).
    pub fn flight_slots(&self, flight: &FlightOffer) -> FlightSlots {
        FlightSlots {
            depart: self.clamp(self.floor_slot(flight.departure)),
            land: self.clamp(self.ceil_slot(flight.arrival)),
        }
    }

    /// Slots `[t_ckin, t_ckout)` during which a stay lets the traveller sleep.
    pub fn stay_slots(&self, hotel: &HotelOffer, check_in: NaiveDate, check_out: NaiveDate) -> Range<usize> {
        let from = self.clamp(self.ceil_slot(at_minute(check_in, hotel.checkin_earliest)));
        let to = self.clamp(self.floor_slot(at_minute(check_out, hotel.checkout_latest)));
        from..to.max(from)
    }

    /// Slots whose start lies in the evening window of `night`.
    pub fn evening_slots(&self, night: NaiveDate) -> Range<usize> {
        let from = self.clamp(self.ceil_slot(at_minute(night, self.evening_start)));
        let next = night + Duration::days(1);
        let to = self.clamp(self.ceil_slot(at_minute(next, self.evening_end)));
        from..to.max(from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dt(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M").unwrap()
    }

    #[test]
    fn red_eye_default_window() {
        let rule = RedEyeRule::default();
        assert!(rule.is_red_eye(dt("2025-01-15T22:10"), dt("2025-01-16T06:30")));
        assert!(rule.is_red_eye(dt("2025-01-15T04:59"), dt("2025-01-15T08:00")));
        assert!(rule.is_red_eye(dt("2025-01-15T18:00"), dt("2025-01-16T01:00")));
        assert!(!rule.is_red_eye(dt("2025-01-15T05:00"), dt("2025-01-15T08:00")));
        assert!(!rule.is_red_eye(dt("2025-01-15T18:00"), dt("2025-01-15T23:59")));
        assert!(!rule.is_red_eye(dt("2025-01-15T20:59"), dt("2025-01-16T06:00")));
    }

    #[test]
    fn slots_round_outward() {
        let rules = Rules::default();
        let d = NaiveDate::from_ymd_opt(2025, 1, 15).unwrap();
        let grid = TimeGrid::new(d, dt("2025-01-19T00:00"), &rules).unwrap();
        assert_eq!(grid.slots, 96);
        assert_eq!(grid.floor_slot(dt("2025-01-15T10:30")), 10);
        assert_eq!(grid.ceil_slot(dt("2025-01-15T10:30")), 11);
        assert_eq!(grid.ceil_slot(dt("2025-01-15T11:00")), 11);
        assert_eq!(grid.evening_slots(d), 22..31);
        assert_eq!(grid.evening_slots(d).len(), 9);
    }

    #[test]
    fn bad_slot_length() {
        let rules = Rules::default().with_slot_minutes(7);
        let d = NaiveDate::from_ymd_opt(2025, 1, 15).unwrap();
        assert_eq!(
            TimeGrid::new(d, dt("2025-01-16T00:00"), &rules),
            Err(GridError::BadSlotLength(7))
        );
    }

    #[test]
    fn min_sleep_slots_scale_with_resolution() {
        assert_eq!(Rules::default().min_sleep_slots(), 6);
        assert_eq!(Rules::default().with_slot_minutes(30).min_sleep_slots(), 12);
    }
}
