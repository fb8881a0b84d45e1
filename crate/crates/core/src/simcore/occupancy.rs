//! Fluid byte accounting for buffering stages.
//!
//! A frame enters a buffer as a linear ramp between the arrival of its first
//! and last byte, and leaves as a second ramp between its first and last
//! departing byte. Occupancy is the sum over residents of bytes arrived
//! minus bytes departed, in whole bytes. Between ramp endpoints it is
//! linear, so its extremes sit on endpoints.
//!
//! A departure that takes no time (the frame leaves the instant it is
//! complete) is counted one nanosecond later, so the frame is resident for
//! that instant.

use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Residency {
    pub size: u64,
    pub arrive: (SimTime, SimTime),
    pub depart: Option<(SimTime, SimTime)>,
    /// Dropped from the stage at this instant; contributes nothing from then on.
    pub until: Option<SimTime>,
}

/// Bytes of a `size`-byte ramp over `[a, b]` completed by `t`.
pub(crate) fn ramp(size: u64, (a, b): (SimTime, SimTime), t: SimTime) -> u64 {
    if t >= b {
        size
    } else if t <= a {
        0
    } else {
        (u128::from(size) * u128::from((t - a).0) / u128::from((b - a).0)) as u64
    }
}

/// Ramp value is constant over `[lo, hi]`.
fn ramp_flat(a: SimTime, b: SimTime, lo: SimTime, hi: SimTime) -> bool {
    b <= lo || (a >= hi && b > hi)
}

impl Residency {
    fn departure(&self) -> Option<(SimTime, SimTime)> {
        self.depart.map(|(s, e)| {
            if s == e {
                (s + SimTime(1), e + SimTime(1))
            } else {
                (s, e)
            }
        })
    }

    pub fn bytes_at(&self, t: SimTime) -> u64 {
        if self.until.is_some_and(|u| t >= u) {
            return 0;
        }
        let arrived = ramp(self.size, self.arrive, t);
        let departed = self.departure().map_or(0, |d| ramp(self.size, d, t));
        arrived.saturating_sub(departed)
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = SimTime> {
        let (a, b) = self.arrive;
        let depart = self.departure().into_iter().flat_map(|(s, e)| [s, e]);
        [a, b].into_iter().chain(depart).chain(self.until)
    }

    fn flat_over(&self, lo: SimTime, hi: SimTime) -> bool {
        let until_ok = self.until.is_none_or(|u| u <= lo || u > hi);
        let (a, b) = self.arrive;
        until_ok
            && ramp_flat(a, b, lo, hi)
            && self
                .departure()
                .is_none_or(|(s, e)| ramp_flat(s, e, lo, hi))
    }
}

/// First instant in `[lo, hi]` at which occupancy exceeds `capacity`.
///
/// Checks every ramp endpoint in the window, then bisects the segment in
/// which the threshold is first crossed.
pub(crate) fn first_overflow(
    residents: &[Residency],
    (lo, hi): (SimTime, SimTime),
    capacity: u64,
) -> Option<SimTime> {
    let mut base = 0u64;
    let mut moving = Vec::new();
    for r in residents {
        if r.flat_over(lo, hi) {
            base += r.bytes_at(lo);
        } else {
            moving.push(*r);
        }
    }
    let occupancy = |t: SimTime| base + moving.iter().map(|r| r.bytes_at(t)).sum::<u64>();

    let mut points: Vec<SimTime> = moving
        .iter()
        .flat_map(Residency::breakpoints)
        .filter(|&p| p > lo && p < hi)
        .chain([lo, hi])
        .collect();
    points.sort_unstable();
    points.dedup();

    let mut below: Option<SimTime> = None;
    for p in points {
        if occupancy(p) > capacity {
            let Some(mut ok) = below else {
                return Some(p);
            };
            let mut over = p;
            while over.0 - ok.0 > 1 {
                let mid = SimTime(ok.0 + (over.0 - ok.0) / 2);
                if occupancy(mid) > capacity {
                    over = mid;
                } else {
                    ok = mid;
                }
            }
            return Some(over);
        }
        below = Some(p);
    }
    None
}

/// Occupancy sampled at every ramp endpoint, in time order.
///
/// `full_at` lists instants at which the stage filled to `capacity` before
/// dropping a frame; each adds a `(t, capacity)` sample ahead of the
/// post-drop sample at the same instant.
pub(crate) fn sweep(
    residents: &[Residency],
    full_at: &[SimTime],
    capacity: Option<u64>,
) -> Vec<(SimTime, u64)> {
    #[derive(Clone, Copy)]
    struct Ramp {
        start: SimTime,
        end: SimTime,
        size: u64,
        outgoing: bool,
        until: Option<SimTime>,
    }

    let mut ramps = Vec::with_capacity(residents.len() * 2);
    let mut queries = Vec::with_capacity(residents.len() * 5);
    for r in residents {
        ramps.push(Ramp {
            start: r.arrive.0,
            end: r.arrive.1,
            size: r.size,
            outgoing: false,
            until: r.until,
        });
        if let Some((s, e)) = r.departure() {
            ramps.push(Ramp {
                start: s,
                end: e,
                size: r.size,
                outgoing: true,
                until: r.until,
            });
        }
        queries.extend(r.breakpoints());
    }
    if queries.is_empty() {
        return Vec::new();
    }
    ramps.sort_by_key(|r| r.start);
    queries.sort_unstable();
    queries.dedup();

    let mut settled: i128 = 0;
    let mut active: Vec<Ramp> = Vec::new();
    let mut next = 0;
    let mut out = Vec::with_capacity(queries.len() + full_at.len());
    for t in queries {
        while next < ramps.len() && ramps[next].start <= t {
            active.push(ramps[next]);
            next += 1;
        }
        active.retain(|r| match r.until {
            Some(u) => t < u,
            None if t >= r.end => {
                let v = i128::from(r.size);
                settled += if r.outgoing { -v } else { v };
                false
            }
            None => true,
        });
        let moving: i128 = active
            .iter()
            .map(|r| {
                let v = i128::from(ramp(r.size, (r.start, r.end), t));
                if r.outgoing {
                    -v
                } else {
                    v
                }
            })
            .sum();
        if let Some(cap) = capacity {
            for _ in full_at.iter().filter(|&&f| f == t) {
                out.push((t, cap));
            }
        }
        out.push((t, (settled + moving).max(0) as u64));
    }
    out
}
