//! Counter-based bandwidth and utilization measurement.
//!
//! Interfaces expose 32-bit octet counters (RFC 1213 semantics, wrap at
//! 2^32); bandwidth is the wrapped counter delta over the poll interval and
//! utilization normalizes it by the interface speed. Two poll cycles are
//! needed before the first measurement. At most one wrap per interval is
//! assumed; faster wrap is undetectable.

use crate::error::{Error, Result};

/// Snapshot of an interface's octet counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceCounters {
    pub in_octets: u32,
    pub out_octets: u32,
    /// Interface speed in bits/s.
    pub if_speed_bps: u64,
}

/// Timestamped counter snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub timestamp_s: f64,
    pub counters: InterfaceCounters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

fn octet_delta(prev: &Sample, curr: &Sample, direction: Direction) -> u32 {
    match direction {
        Direction::In => curr.counters.in_octets.wrapping_sub(prev.counters.in_octets),
        Direction::Out => curr.counters.out_octets.wrapping_sub(prev.counters.out_octets),
    }
}

fn interval(prev: &Sample, curr: &Sample) -> Result<f64> {
    let dt = curr.timestamp_s - prev.timestamp_s;
    if !(dt > 0.0) {
        return Err(Error::InvalidMeasurement(format!(
            "sample interval must be positive, got {dt}"
        )));
    }
    Ok(dt)
}

/// Bandwidth in bits/s from two counter snapshots.
pub fn bandwidth(prev: &Sample, curr: &Sample, direction: Direction) -> Result<f64> {
    let dt = interval(prev, curr)?;
    Ok(octet_delta(prev, curr, direction) as f64 * 8.0 / dt)
}

/// Utilization in percent, clamped to [0, 100].
pub fn utilization(prev: &Sample, curr: &Sample, direction: Direction) -> Result<f64> {
    if curr.counters.if_speed_bps == 0 {
        return Err(Error::Config("ifSpeed must be > 0".into()));
    }
    let bw = bandwidth(prev, curr, direction)?;
    Ok((bw * 100.0 / curr.counters.if_speed_bps as f64).clamp(0.0, 100.0))
}

/// Exponentially weighted moving average, `v' = alpha x + (1 - alpha) v`.
/// The first observation initializes the estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwmaEstimator {
    alpha: f64,
    value: Option<f64>,
}

/// Default smoothing weight.
pub const DEFAULT_EWMA_ALPHA: f64 = 0.3;

impl EwmaEstimator {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must be in (0, 1], got {alpha}")));
        }
        Ok(EwmaEstimator { alpha, value: None })
    }

    pub fn update(&mut self, x: f64) -> f64 {
        let v = match self.value {
            None => x,
            Some(v) => self.alpha * x + (1.0 - self.alpha) * v,
        };
        self.value = Some(v);
        v
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }
}

/// Fired when utilization crosses above the trigger threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEvent {
    pub utilization_pct: f64,
}

/// One-shot threshold trigger with hysteresis.
///
/// Fires when utilization crosses above the threshold and re-arms only after
/// it falls below `threshold - hysteresis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdTrigger {
    threshold_pct: f64,
    hysteresis_pct: f64,
    armed: bool,
}

/// Default hysteresis in percentage points.
pub const DEFAULT_HYSTERESIS_PCT: f64 = 5.0;

impl ThresholdTrigger {
    pub fn new(threshold_pct: f64, hysteresis_pct: f64) -> Result<Self> {
        if !(threshold_pct > 0.0 && threshold_pct <= 100.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold must be in (0, 100], got {threshold_pct}"
            )));
        }
        if !(hysteresis_pct >= 0.0) {
            return Err(Error::InvalidParameter("hysteresis must be >= 0".into()));
        }
        Ok(ThresholdTrigger { threshold_pct, hysteresis_pct, armed: true })
    }

    pub fn observe(&mut self, utilization_pct: f64) -> Option<TriggerEvent> {
        if self.armed && utilization_pct > self.threshold_pct {
            self.armed = false;
            return Some(TriggerEvent { utilization_pct });
        }
        if !self.armed && utilization_pct < self.threshold_pct - self.hysteresis_pct {
            self.armed = true;
        }
        None
    }
}

/// Single-interface poller: feed samples, get a measurement from the second
/// poll cycle onwards.
#[derive(Debug, Clone, Default)]
pub struct InterfacePoller {
    last: Option<Sample>,
}

/// One completed measurement over a poll interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub timestamp_s: f64,
    pub bandwidth_in_bps: f64,
    pub bandwidth_out_bps: f64,
    pub utilization_in_pct: f64,
    pub utilization_out_pct: f64,
}

impl InterfacePoller {
    pub fn new() -> Self {
        InterfacePoller { last: None }
    }

    /// Returns `None` for the first sample on the interface.
    pub fn push(&mut self, sample: Sample) -> Result<Option<Measurement>> {
        let result = match &self.last {
            None => None,
            Some(prev) => Some(Measurement {
                timestamp_s: sample.timestamp_s,
                bandwidth_in_bps: bandwidth(prev, &sample, Direction::In)?,
                bandwidth_out_bps: bandwidth(prev, &sample, Direction::Out)?,
                utilization_in_pct: utilization(prev, &sample, Direction::In)?,
                utilization_out_pct: utilization(prev, &sample, Direction::Out)?,
            }),
        };
        self.last = Some(sample);
        Ok(result)
    }
}

/// Emulated interface whose counters advance from fluid-model throughput.
#[derive(Debug, Clone)]
pub struct EmulatedInterface {
    if_speed_bps: u64,
    in_octets: u32,
    out_octets: u32,
    // carry sub-octet remainders so long runs do not drift
    in_frac: f64,
    out_frac: f64,
}

impl EmulatedInterface {
    pub fn new(if_speed_bps: u64) -> Self {
        EmulatedInterface { if_speed_bps, in_octets: 0, out_octets: 0, in_frac: 0.0, out_frac: 0.0 }
    }

    /// Advance the counters by `duration_s` at the given rates.
    pub fn advance(&mut self, duration_s: f64, in_kbps: f64, out_kbps: f64) {
        // kbit/s * s * 1000 / 8 = octets
        self.in_frac += in_kbps * duration_s * 125.0;
        self.out_frac += out_kbps * duration_s * 125.0;
        let whole_in = self.in_frac.floor();
        let whole_out = self.out_frac.floor();
        self.in_frac -= whole_in;
        self.out_frac -= whole_out;
        self.in_octets = self.in_octets.wrapping_add(whole_in as u64 as u32);
        self.out_octets = self.out_octets.wrapping_add(whole_out as u64 as u32);
    }

    pub fn sample(&self, timestamp_s: f64) -> Sample {
        Sample {
            timestamp_s,
            counters: InterfaceCounters {
                in_octets: self.in_octets,
                out_octets: self.out_octets,
                if_speed_bps: self.if_speed_bps,
            },
        }
    }
}

/// Replay source for timestamped counter logs
/// (CSV lines `timestamp,in_octets,out_octets`).
#[derive(Debug, Clone)]
pub struct ReplaySource {
    samples: Vec<Sample>,
    pos: usize,
}

impl ReplaySource {
    pub fn from_csv(text: &str, if_speed_bps: u64) -> Result<Self> {
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with("timestamp") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(lineno, "expected `timestamp,in_octets,out_octets`"));
            }
            let timestamp_s: f64 = fields[0]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid timestamp {:?}", fields[0])))?;
            let in_octets: u32 = fields[1]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid counter {:?}", fields[1])))?;
            let out_octets: u32 = fields[2]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid counter {:?}", fields[2])))?;
            if let Some(prev) = samples.last() {
                let prev: &Sample = prev;
                if timestamp_s <= prev.timestamp_s {
                    return Err(Error::parse(lineno, "timestamps must be strictly increasing"));
                }
            }
            samples.push(Sample {
                timestamp_s,
                counters: InterfaceCounters { in_octets, out_octets, if_speed_bps },
            });
        }
        Ok(ReplaySource { samples, pos: 0 })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

impl Iterator for ReplaySource {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        let s = self.samples.get(self.pos).copied();
        self.pos += 1;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, octets: u32) -> Sample {
        Sample {
            timestamp_s: t,
            counters: InterfaceCounters {
                in_octets: octets,
                out_octets: octets,
                if_speed_bps: 10_000_000,
            },
        }
    }

    #[test]
    fn bandwidth_direct_arithmetic() {
        let bw = bandwidth(&sample(0.0, 0), &sample(10.0, 1_250_000), Direction::In).unwrap();
        assert_eq!(bw, 1_000_000.0);
    }

    #[test]
    fn bandwidth_counter_wrap() {
        let bw = bandwidth(&sample(0.0, u32::MAX - 99), &sample(10.0, 900), Direction::In).unwrap();
        assert_eq!(bw, 800.0); // 1000 octets across the wrap
    }

    #[test]
    fn bandwidth_zero_and_bad_interval() {
        assert_eq!(bandwidth(&sample(0.0, 5), &sample(10.0, 5), Direction::In).unwrap(), 0.0);
        assert!(bandwidth(&sample(10.0, 0), &sample(10.0, 1), Direction::In).is_err());
        assert!(bandwidth(&sample(10.0, 0), &sample(5.0, 1), Direction::In).is_err());
    }

    #[test]
    fn utilization_matches_bandwidth_before_clamp() {
        let prev = sample(0.0, 0);
        let curr = sample(10.0, 1_250_000);
        let u = utilization(&prev, &curr, Direction::In).unwrap();
        assert_eq!(u, 10.0);
        let bw = bandwidth(&prev, &curr, Direction::In).unwrap();
        assert_eq!(u.to_bits(), (bw * 100.0 / 10_000_000.0).to_bits());
    }

    #[test]
    fn utilization_clamps_at_100() {
        let u = utilization(&sample(0.0, 0), &sample(10.0, 12_500_000 * 10), Direction::In);
        assert_eq!(u.unwrap(), 100.0);
    }

    #[test]
    fn utilization_rejects_zero_speed() {
        let mut prev = sample(0.0, 0);
        let mut curr = sample(10.0, 100);
        prev.counters.if_speed_bps = 0;
        curr.counters.if_speed_bps = 0;
        assert!(matches!(utilization(&prev, &curr, Direction::In), Err(Error::Config(_))));
    }

    #[test]
    fn ewma_behavior() {
        let mut est = EwmaEstimator::new(0.3).unwrap();
        assert_eq!(est.update(0.0), 0.0); // first observation initializes
        assert_eq!(est.update(1.0), 0.3);

        let mut est = EwmaEstimator::new(0.3).unwrap();
        est.update(5.0);
        assert_eq!(est.update(5.0), 5.0); // fixed point

        let mut est = EwmaEstimator::new(0.3).unwrap();
        est.update(0.0);
        for _ in 0..200 {
            est.update(42.0);
        }
        assert!((est.value().unwrap() - 42.0).abs() < 1e-9);
    }

    #[test]
    fn ewma_rejects_bad_alpha() {
        assert!(EwmaEstimator::new(0.0).is_err());
        assert!(EwmaEstimator::new(1.5).is_err());
    }

    #[test]
    fn trigger_fires_and_rearms() {
        let mut t = ThresholdTrigger::new(80.0, 5.0).unwrap();
        assert!(t.observe(70.0).is_none());
        assert!(t.observe(85.0).is_some());

        let mut t = ThresholdTrigger::new(80.0, 5.0).unwrap();
        assert!(t.observe(85.0).is_some());
        assert!(t.observe(86.0).is_none());
        assert!(t.observe(87.0).is_none());

        let mut t = ThresholdTrigger::new(80.0, 5.0).unwrap();
        assert!(t.observe(85.0).is_some());
        assert!(t.observe(74.0).is_none()); // below 75: re-armed
        assert!(t.observe(85.0).is_some());
    }

    #[test]
    fn poller_needs_two_cycles() {
        let mut p = InterfacePoller::new();
        assert!(p.push(sample(0.0, 0)).unwrap().is_none());
        let m = p.push(sample(10.0, 1_250_000)).unwrap().unwrap();
        assert_eq!(m.bandwidth_in_bps, 1_000_000.0);
        assert_eq!(m.utilization_in_pct, 10.0);
    }

    #[test]
    fn replay_source_round_trip() {
        let csv = "timestamp,in_octets,out_octets\n0,0,0\n10,1250000,2500000\n";
        let mut src = ReplaySource::from_csv(csv, 10_000_000).unwrap();
        let mut p = InterfacePoller::new();
        assert!(p.push(src.next().unwrap()).unwrap().is_none());
        let m = p.push(src.next().unwrap()).unwrap().unwrap();
        assert_eq!(m.bandwidth_in_bps, 1_000_000.0);
        assert_eq!(m.bandwidth_out_bps, 2_000_000.0);
        assert!(src.next().is_none());
    }

    #[test]
    fn replay_rejects_non_increasing_timestamps() {
        assert!(ReplaySource::from_csv("0,0,0\n0,1,1\n", 1).is_err());
    }

    #[test]
    fn emulated_interface_accumulates() {
        let mut iface = EmulatedInterface::new(10_000_000);
        let s0 = iface.sample(0.0);
        iface.advance(10.0, 1000.0, 500.0); // 1 Mbit/s in for 10 s
        let s1 = iface.sample(10.0);
        assert_eq!(bandwidth(&s0, &s1, Direction::In).unwrap(), 1_000_000.0);
        assert_eq!(bandwidth(&s0, &s1, Direction::Out).unwrap(), 500_000.0);
    }
}
