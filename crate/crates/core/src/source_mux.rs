//! Chip-code multiplexing of light sources.
//!
//! Each illumination period of a device is replaced by the device's chip
//! sequence, so a receiver can tell its own light from another device's by the
//! temporal signature alone. Two receivers are simulated: an event camera
//! filtered by polarity correlation, and a line-scanning light curtain
//! filtered by exact sequence match.

use std::fmt;
use std::str::FromStr;

use crate::channel::NoiseModel;
use crate::error::{domain, Error, Result};
use crate::grid::{Grid, Mask};

/// A device's chip sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChipCode {
    bits: Vec<u8>,
    pub device: u32,
}

impl ChipCode {
    pub fn new(bits: Vec<u8>, device: u32) -> Result<Self> {
        if bits.is_empty() {
            return domain("chip code is empty");
        }
        if bits.iter().any(|&b| b > 1) {
            return domain("chip code must be binary");
        }
        if bits.iter().all(|&b| b == 0) {
            return domain("chip code is all zeros");
        }
        Ok(ChipCode { bits, device })
    }

    /// Parses a string of '0'/'1' characters.
    pub fn parse(s: &str, device: u32) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("chip code {s:?} contains {ch:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        ChipCode::new(bits, device)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Expected event polarities over one period, starting from darkness:
    /// `+1` on a rise, `-1` on a fall, `0` otherwise.
    pub fn transition_signature(&self) -> Vec<i8> {
        self.signature_after(0)
    }

    /// Expected polarities over a period that directly follows another chip period.
    pub fn repeat_signature(&self) -> Vec<i8> {
        self.signature_after(*self.bits.last().expect("chip is nonempty"))
    }

    fn signature_after(&self, start: u8) -> Vec<i8> {
        let mut prev = start;
        self.bits
            .iter()
            .map(|&b| {
                let s = b as i8 - prev as i8;
                prev = b;
                s
            })
            .collect()
    }
}

impl fmt::Display for ChipCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ChipCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChipCode::parse(s, 0)
    }
}

/// Replaces each on period with the chip and each off period with zeros.
pub fn chip_expand(timeline: &[u8], chip: &ChipCode) -> Result<Vec<u8>> {
    if timeline.is_empty() {
        return domain("empty timeline");
    }
    if chip.len() < 2 {
        return domain("chip must span at least two slots");
    }
    if timeline.iter().any(|&b| b > 1) {
        return domain("timeline must be binary");
    }
    let zeros = vec![0u8; chip.len()];
    Ok(timeline
        .iter()
        .flat_map(|&b| if b == 1 { chip.bits() } else { &zeros[..] }.iter().copied())
        .collect())
}

/// Inverse of [`chip_expand`] by per-period vote over the chip's on slots.
pub fn chip_collapse(expanded: &[u8], chip: &ChipCode) -> Result<Vec<u8>> {
    if expanded.is_empty() || !expanded.len().is_multiple_of(chip.len()) {
        return domain("expanded length is not a whole number of chip periods");
    }
    Ok(expanded
        .chunks(chip.len())
        .map(|period| {
            let (on, off) = period
                .iter()
                .zip(chip.bits())
                .filter(|(_, &c)| c == 1)
                .fold((0, 0), |(on, off), (&b, _)| if b == 1 { (on + 1, off) } else { (on, off + 1) });
            u8::from(on > off)
        })
        .collect())
}

/// A brightness-change event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub t: usize,
    pub row: usize,
    pub col: usize,
    pub polarity: i8,
}

/// Events sorted by pixel (row-major) and, within a pixel, by time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventStream {
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Pixels with at least one event.
    pub fn active_pixels(&self, rows: usize, cols: usize) -> Mask {
        let mut mask = Grid::filled(rows, cols, false);
        for e in &self.events {
            mask.set(e.row, e.col, true);
        }
        mask
    }

    pub fn csv_header() -> &'static str {
        "t,row,col,polarity"
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for e in &self.events {
            out.push_str(&format!("{},{},{},{}\n", e.t, e.row, e.col, e.polarity));
        }
        out
    }
}

/// Emits an event at `t` wherever `|I(t) - I(t-1)| > threshold`, with
/// `I(-1) = 0`.
pub fn simulate_events(timelines: &Grid<Vec<f32>>, threshold: f32) -> Result<EventStream> {
    if !(threshold > 0.0) {
        return domain("event threshold must be positive");
    }
    let mut events = Vec::new();
    for r in 0..timelines.rows() {
        for c in 0..timelines.cols() {
            let mut prev = 0.0f32;
            for (t, &v) in timelines.get(r, c).iter().enumerate() {
                let delta = v - prev;
                if delta.abs() > threshold {
                    events.push(Event {
                        t,
                        row: r,
                        col: c,
                        polarity: if delta > 0.0 { 1 } else { -1 },
                    });
                }
                prev = v;
            }
        }
    }
    Ok(EventStream { events })
}

/// Normalized correlation between an observed polarity sequence and a signature.
pub fn signature_correlation(observed: &[i8], signature: &[i8]) -> f32 {
    let dot: i32 = observed.iter().zip(signature).map(|(&a, &b)| a as i32 * b as i32).sum();
    let na: i32 = observed.iter().map(|&a| (a as i32).pow(2)).sum();
    let nb: i32 = signature.iter().map(|&b| (b as i32).pow(2)).sum();
    if na == 0 || nb == 0 {
        return 0.0;
    }
    dot as f32 / ((na as f32) * (nb as f32)).sqrt()
}

/// Keeps a pixel's events in a chip period only if their polarity pattern
/// correlates with the chip's transition signature at `threshold` or above.
/// Periods start at multiples of the chip length; a period may follow either
/// darkness or another chip period, and the better match of the two counts.
pub fn matched_filter_events(stream: &EventStream, chip: &ChipCode, threshold: f32) -> EventStream {
    let len = chip.len();
    let fresh = chip.transition_signature();
    let repeat = chip.repeat_signature();
    let mut kept = Vec::with_capacity(stream.len());
    let mut start = 0;
    let events = &stream.events;
    while start < events.len() {
        let key = |e: &Event| (e.row, e.col, e.t / len);
        let k = key(&events[start]);
        let mut end = start;
        while end < events.len() && key(&events[end]) == k {
            end += 1;
        }
        let mut observed = vec![0i8; len];
        for e in &events[start..end] {
            observed[e.t % len] = e.polarity;
        }
        let score = signature_correlation(&observed, &fresh).max(signature_correlation(&observed, &repeat));
        if score >= threshold {
            kept.extend_from_slice(&events[start..end]);
        }
        start = end;
    }
    EventStream { events: kept }
}

/// Two event-camera setups sharing a scene: our projector lights `own`
/// pixels with a chip-expanded timeline, an interfering projector lights
/// `interferer` pixels with its own sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct EventDemo {
    pub own: Mask,
    pub interferer: Mask,
    pub own_chip: ChipCode,
    /// Sequence of the interfering source, repeated to the demo length.
    pub interferer_sequence: Vec<u8>,
    /// Our projector's on/off periods before expansion.
    pub periods: Vec<u8>,
    pub event_threshold: f32,
    pub score_threshold: f32,
    pub noise: Option<NoiseModel>,
}

impl EventDemo {
    /// Our chip against a constant-frequency `10` interferer on disjoint pixel sets.
    pub fn standard(rows: usize, cols: usize, own_chip: ChipCode) -> Self {
        let own = Grid::from_fn(rows, cols, |r, c| (r + c) % 4 == 0);
        let interferer = Grid::from_fn(rows, cols, |r, c| (r + c) % 4 == 2);
        EventDemo {
            own,
            interferer,
            own_chip,
            interferer_sequence: vec![1, 0],
            periods: vec![1; 4],
            event_threshold: 0.5,
            score_threshold: 0.9,
            noise: None,
        }
    }
}

/// Detection counts before and after filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct MuxReport {
    /// Detections at pixels we did not light, before filtering.
    pub false_before: usize,
    pub false_after: usize,
    /// Pixels we lit that produced no retained detection.
    pub missed_before: usize,
    pub missed_after: usize,
    /// Expanded frames divided by unexpanded frames.
    pub frame_overhead: f32,
}

/// Output of [`run_event_demo`].
#[derive(Clone, Debug, PartialEq)]
pub struct EventDemoResult {
    pub raw: EventStream,
    pub filtered: EventStream,
    pub report: MuxReport,
}

/// Per-pixel intensity timelines of the event demo.
pub fn event_demo_timelines(demo: &EventDemo) -> Result<Grid<Vec<f32>>> {
    if !demo.own.same_shape(&demo.interferer) {
        return domain("pixel masks differ in shape");
    }
    if demo.interferer_sequence.is_empty() {
        return domain("interferer sequence is empty");
    }
    let own_line = chip_expand(&demo.periods, &demo.own_chip)?;
    let len = own_line.len();
    let other: Vec<u8> = demo.interferer_sequence.iter().copied().cycle().take(len).collect();
    let mut grid = Grid::from_fn(demo.own.rows(), demo.own.cols(), |r, c| {
        (0..len)
            .map(|t| {
                let mut v = 0.0;
                if *demo.own.get(r, c) {
                    v += own_line[t] as f32;
                }
                if *demo.interferer.get(r, c) {
                    v += other[t] as f32;
                }
                v
            })
            .collect::<Vec<f32>>()
    });
    if let Some(noise) = &demo.noise {
        noise.validate()?;
        let rows = grid.rows();
        for r in 0..rows {
            let mut rng = noise.stream(0, rows, r);
            for line in grid.row_mut(r) {
                for v in line.iter_mut() {
                    *v = noise.sample(v.min(1.0), &mut rng);
                }
            }
        }
    }
    Ok(grid)
}

pub fn run_event_demo(demo: &EventDemo) -> Result<EventDemoResult> {
    let timelines = event_demo_timelines(demo)?;
    let raw = simulate_events(&timelines, demo.event_threshold)?;
    let filtered = matched_filter_events(&raw, &demo.own_chip, demo.score_threshold);
    let (rows, cols) = (demo.own.rows(), demo.own.cols());
    let count = |stream: &EventStream| {
        let hit = stream.active_pixels(rows, cols);
        let mut false_hits = 0;
        let mut missed = 0;
        for (&h, &own) in hit.iter().zip(demo.own.iter()) {
            match (h, own) {
                (true, false) => false_hits += 1,
                (false, true) => missed += 1,
                _ => {}
            }
        }
        (false_hits, missed)
    };
    let (false_before, missed_before) = count(&raw);
    let (false_after, missed_after) = count(&filtered);
    Ok(EventDemoResult {
        raw,
        filtered,
        report: MuxReport {
            false_before,
            false_after,
            missed_before,
            missed_after,
            frame_overhead: demo.own_chip.len() as f32 / 2.0,
        },
    })
}

/// A line-scanning light curtain: in slot `s` it lights scene column
/// `schedule[s]` and reads the same column with its line camera.
#[derive(Clone, Debug, PartialEq)]
pub struct CurtainDevice {
    pub chip: ChipCode,
    pub schedule: Vec<usize>,
}

/// Detections of one device in one scan slot, per camera row.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionFrame {
    pub slot: usize,
    pub detections: Vec<bool>,
    /// Fraction of chip positions where the binarized sequence matches the chip.
    pub scores: Vec<f32>,
}

/// Output of [`simulate_light_curtains`], indexed by device.
#[derive(Clone, Debug, PartialEq)]
pub struct CurtainResult {
    /// Detections without filtering: any slot position above 0.5.
    pub raw: [Vec<DetectionFrame>; 2],
    /// Detections after exact chip matching.
    pub filtered: [Vec<DetectionFrame>; 2],
    /// Object hits on each device's own curtain.
    pub truth: [Vec<Vec<bool>>; 2],
    /// (slot, row) pairs where a camera row saw both curtains hit objects.
    pub overlaps: usize,
    /// Set when the chips cannot be told apart.
    pub warning: Option<String>,
    chip_len: usize,
}

impl CurtainResult {
    /// False and missed detections of `device` in raw and filtered output.
    pub fn report(&self, device: usize) -> MuxReport {
        let tally = |frames: &[DetectionFrame]| {
            let mut false_hits = 0;
            let mut missed = 0;
            for (frame, truth) in frames.iter().zip(&self.truth[device]) {
                for (&d, &t) in frame.detections.iter().zip(truth) {
                    match (d, t) {
                        (true, false) => false_hits += 1,
                        (false, true) => missed += 1,
                        _ => {}
                    }
                }
            }
            (false_hits, missed)
        };
        let (false_before, missed_before) = tally(&self.raw[device]);
        let (false_after, missed_after) = tally(&self.filtered[device]);
        MuxReport {
            false_before,
            false_after,
            missed_before,
            missed_after,
            frame_overhead: self.chip_len as f32,
        }
    }
}

/// Simulates two slot-synchronized light curtains over an occupancy grid.
///
/// In each slot, a camera row of device `d` receives its own chip when its
/// curtain column holds an object in that row, plus `coupling` times the other
/// device's chip when the other curtain's column does. The sequence is
/// binarized at 0.5; a detection is an exact match with the device's chip.
pub fn simulate_light_curtains(
    devices: &[CurtainDevice; 2],
    objects: &Mask,
    coupling: f32,
    noise: Option<&NoiseModel>,
) -> Result<CurtainResult> {
    if !(0.0..=1.0).contains(&coupling) {
        return domain("coupling must lie in [0, 1]");
    }
    let slots = devices[0].schedule.len();
    if slots == 0 || devices[1].schedule.len() != slots {
        return domain("devices need equal, nonempty scan schedules");
    }
    for d in devices {
        if d.chip.len() < 2 {
            return domain("chip must span at least two slots");
        }
        if d.schedule.iter().any(|&c| c >= objects.cols()) {
            return domain("scan schedule leaves the scene");
        }
    }
    if devices[0].chip.len() != devices[1].chip.len() {
        return domain("slot-synchronized devices need chips of equal length");
    }
    if let Some(n) = noise {
        n.validate()?;
    }
    let warning = (devices[0].chip.bits() == devices[1].chip.bits())
        .then(|| "identical chips: interference cannot be separated".to_string());
    let rows = objects.rows();
    let len = devices[0].chip.len();
    let mut raw: [Vec<DetectionFrame>; 2] = [Vec::new(), Vec::new()];
    let mut filtered: [Vec<DetectionFrame>; 2] = [Vec::new(), Vec::new()];
    let mut truth: [Vec<Vec<bool>>; 2] = [Vec::new(), Vec::new()];
    let mut overlaps = 0;
    for s in 0..slots {
        for d in 0..2 {
            let own = &devices[d];
            let other = &devices[1 - d];
            let mut raw_frame = DetectionFrame {
                slot: s,
                detections: vec![false; rows],
                scores: vec![0.0; rows],
            };
            let mut filt_frame = raw_frame.clone();
            let mut hits = vec![false; rows];
            let mut rng = noise.map(|n| n.stream(s * 2 + d, rows.max(1), 0));
            for r in 0..rows {
                let own_hit = *objects.get(r, own.schedule[s]);
                let other_hit = *objects.get(r, other.schedule[s]);
                hits[r] = own_hit;
                if own_hit && other_hit && coupling > 0.0 && d == 0 {
                    overlaps += 1;
                }
                let binarized: Vec<u8> = (0..len)
                    .map(|k| {
                        let mut v = if own_hit { own.chip.bits()[k] as f32 } else { 0.0 };
                        if other_hit {
                            v += coupling * other.chip.bits()[k] as f32;
                        }
                        if let (Some(n), Some(rng)) = (noise, rng.as_mut()) {
                            v = n.sample(v.min(1.0), rng);
                        }
                        u8::from(v > 0.5)
                    })
                    .collect();
                let matches = binarized.iter().zip(own.chip.bits()).filter(|(a, b)| a == b).count();
                raw_frame.detections[r] = binarized.contains(&1);
                raw_frame.scores[r] = if raw_frame.detections[r] { 1.0 } else { 0.0 };
                filt_frame.scores[r] = matches as f32 / len as f32;
                filt_frame.detections[r] = matches == len;
            }
            raw[d].push(raw_frame);
            filtered[d].push(filt_frame);
            truth[d].push(hits);
        }
    }
    Ok(CurtainResult {
        raw,
        filtered,
        truth,
        overlaps,
        warning,
        chip_len: len,
    })
}

/// Two curtains sweeping in opposite directions across objects placed so that
/// no camera row ever sees both curtains hit at once.
pub fn standard_curtain_scene(rows: usize, cols: usize) -> Result<(Mask, [Vec<usize>; 2])> {
    if rows < 8 || cols < 8 {
        return domain("curtain scene needs at least 8 rows and columns");
    }
    let mut objects = Grid::filled(rows, cols, false);
    // upper object on the left, lower object on the right
    for r in 0..rows / 3 {
        for c in cols / 8..cols / 4 {
            objects.set(r, c, true);
        }
    }
    for r in rows / 2..rows {
        for c in 5 * cols / 8..3 * cols / 4 {
            objects.set(r, c, true);
        }
    }
    let forward: Vec<usize> = (0..cols).collect();
    let backward: Vec<usize> = (0..cols).rev().collect();
    Ok((objects, [forward, backward]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chip(s: &str) -> ChipCode {
        ChipCode::parse(s, 0).unwrap()
    }

    #[test]
    fn expansion_examples() {
        let c = chip("10100010");
        assert_eq!(chip_expand(&[1, 0], &c).unwrap(), [c.bits(), &[0; 8][..]].concat());
        assert_eq!(chip_expand(&[0, 0, 0], &c).unwrap(), vec![0; 24]);
        assert!(chip_expand(&[], &c).is_err());
        assert!(chip_expand(&[1], &chip("1")).is_err());
    }

    #[test]
    fn bad_chips_rejected() {
        assert!(ChipCode::parse("", 0).is_err());
        assert!(ChipCode::parse("0000", 0).is_err());
        assert!(ChipCode::parse("10x1", 0).is_err());
        assert_eq!(chip("0101").to_string(), "0101");
    }

    #[test]
    fn chip_transitions() {
        let timelines = Grid::from_vec(1, 1, vec![chip("10100010").bits().iter().map(|&b| b as f32).collect()]);
        let stream = simulate_events(&timelines, 0.5).unwrap();
        let pol: Vec<(usize, i8)> = stream.events.iter().map(|e| (e.t, e.polarity)).collect();
        assert_eq!(pol, vec![(0, 1), (1, -1), (2, 1), (3, -1), (6, 1), (7, -1)]);
    }

    #[test]
    fn constant_and_step_inputs() {
        let flat = Grid::from_vec(1, 1, vec![vec![0.7f32; 10]]);
        let stream = simulate_events(&flat, 0.1).unwrap();
        assert_eq!(stream.len(), 1);
        let step = Grid::from_vec(1, 1, vec![vec![0.0, 0.0, 1.0, 1.0]]);
        let stream = simulate_events(&step, 0.5).unwrap();
        assert_eq!(stream.events, vec![Event { t: 2, row: 0, col: 0, polarity: 1 }]);
        assert!(simulate_events(&step, 0.0).is_err());
    }

    #[test]
    fn periodic_interferer_correlation_below_threshold() {
        let own = chip("10100010");
        let square = chip("10101010");
        let rho = signature_correlation(&square.transition_signature(), &own.transition_signature());
        assert!((rho - 6.0 / 48f32.sqrt()).abs() < 1e-6);
        assert!(rho < 0.9);
    }

    #[test]
    fn empty_stream_filters_to_empty() {
        let out = matched_filter_events(&EventStream::default(), &chip("1100"), 0.9);
        assert!(out.is_empty());
    }

    #[test]
    fn curtain_coupling_zero_matches_truth() {
        let (objects, schedules) = standard_curtain_scene(16, 32).unwrap();
        let devices = [
            CurtainDevice { chip: chip("1100"), schedule: schedules[0].clone() },
            CurtainDevice { chip: chip("0101"), schedule: schedules[1].clone() },
        ];
        let res = simulate_light_curtains(&devices, &objects, 0.0, None).unwrap();
        for d in 0..2 {
            let rep = res.report(d);
            assert_eq!((rep.false_before, rep.missed_before, rep.false_after, rep.missed_after), (0, 0, 0, 0));
        }
        assert!(res.warning.is_none());
        assert_eq!(res.overlaps, 0);
    }
}
