//! Frame ingestion, chunking, and a synthetic group-motion generator.
//!
//! Position files hold raw map coordinates; loading divides by the map extent
//! so every coordinate lands in `[0, 1]`.
//!
//! JSONL: one object per line, `{"t": 12, "agents": [[x, y], ...], "player": [..]}`
//! with `player` optional. CSV: header `t,x,y` or `t,x,y,player`, one agent per
//! row; rows sharing `t` form one frame.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::Range;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{validate_frame, Chunk, Frame, Point, Split, DEFAULT_CHUNK_LEN};

pub const DEFAULT_EXTENT: f64 = 256.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameFormat {
    Jsonl,
    Csv,
}

impl FrameFormat {
    /// Guesses from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> FrameFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FrameFormat::Csv,
            _ => FrameFormat::Jsonl,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlFrame {
    t: i64,
    agents: Vec<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    player: Vec<i64>,
}

fn normalize(frame: Frame, extent: f64) -> Result<Frame> {
    let agents = frame
        .agents
        .iter()
        .map(|p| [p[0] / extent, p[1] / extent])
        .collect();
    validate_frame(Frame { agents, ..frame })
}

pub fn parse_jsonl(text: &str, extent: f64, origin: &str) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: JsonlFrame = serde_json::from_str(line).map_err(|e| Error::Parse {
            location: format!("{origin}:{}", n + 1),
            reason: e.to_string(),
        })?;
        let mut frame = Frame::new(raw.t, raw.agents);
        frame.players = raw.player;
        frames.push(normalize(frame, extent)?);
    }
    finish(frames)
}

pub fn parse_csv(text: &str, extent: f64, origin: &str) -> Result<Vec<Frame>> {
    let mut by_t: BTreeMap<i64, Frame> = BTreeMap::new();
    let mut with_player = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let location = || format!("{origin}:{}", n + 1);
        if n == 0 && cols.first().is_some_and(|c| c.eq_ignore_ascii_case("t")) {
            with_player = cols.len() >= 4;
            continue;
        }
        if cols.len() < 3 {
            return Err(Error::Parse {
                location: location(),
                reason: format!("expected t,x,y[,player], got {} columns", cols.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                location: location(),
                reason: format!("{s:?}: {e}"),
            })
        };
        let t: i64 = cols[0].parse().map_err(|e| Error::Parse {
            location: location(),
            reason: format!("frame index {:?}: {e}", cols[0]),
        })?;
        let frame = by_t.entry(t).or_insert_with(|| Frame::new(t, Vec::new()));
        frame.agents.push([num(cols[1])?, num(cols[2])?]);
        if with_player || cols.len() >= 4 {
            let p = cols.get(3).map(|s| num(s)).transpose()?.unwrap_or(0.0);
            frame.players.push(p as i64);
        }
    }
    let frames = by_t
        .into_values()
        .map(|f| normalize(f, extent))
        .collect::<Result<Vec<_>>>()?;
    finish(frames)
}

fn finish(mut frames: Vec<Frame>) -> Result<Vec<Frame>> {
    frames.sort_by_key(|f| f.index);
    if let Some(w) = frames.windows(2).find(|w| w[0].index == w[1].index) {
        return Err(Error::DuplicateFrame(w[0].index));
    }
    if frames.is_empty() {
        log::warn!("no frames found");
    }
    Ok(frames)
}

pub fn load_frames(path: impl AsRef<Path>, format: FrameFormat, extent: f64) -> Result<Vec<Frame>> {
    let path = path.as_ref();
    if !(extent > 0.0) {
        return Err(Error::InvalidConfig(format!("map extent must be > 0, got {extent}")));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    match format {
        FrameFormat::Jsonl => parse_jsonl(&text, extent, &origin),
        FrameFormat::Csv => parse_csv(&text, extent, &origin),
    }
}

/// Writes frames as JSONL in raw map units (`coordinate * extent`).
pub fn write_frames_jsonl<W: Write>(mut out: W, frames: &[Frame], extent: f64) -> std::io::Result<()> {
    for f in frames {
        let raw = JsonlFrame {
            t: f.index,
            agents: f.agents.iter().map(|p| [p[0] * extent, p[1] * extent]).collect(),
            player: f.players.clone(),
        };
        serde_json::to_writer(&mut out, &raw)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Index ranges of consecutive, non-overlapping windows of `chunk_len` frames.
/// A gap in frame numbering restarts the window.
pub fn chunk_windows(indices: &[i64], chunk_len: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 1;
    if chunk_len == 0 {
        return out;
    }
    while start < indices.len() {
        if i - start == chunk_len {
            out.push(start..i);
            start = i;
            i += 1;
            continue;
        }
        if i >= indices.len() {
            break;
        }
        if indices[i] != indices[i - 1] + 1 {
            start = i;
        }
        i += 1;
    }
    out
}

/// Chunk counts for a contiguous train/val/test partition.
pub fn split_counts(n_chunks: usize, ratios: (usize, usize, usize)) -> (usize, usize, usize) {
    let total = ratios.0 + ratios.1 + ratios.2;
    let train = n_chunks * ratios.0 / total;
    let val = n_chunks * ratios.1 / total;
    (train, val, n_chunks - train - val)
}

pub fn split_for(position: usize, counts: (usize, usize, usize)) -> Split {
    if position < counts.0 {
        Split::Train
    } else if position < counts.0 + counts.1 {
        Split::Val
    } else {
        Split::Test
    }
}

#[derive(Clone, Debug, Default)]
pub struct DatasetSplit {
    pub train: Vec<Chunk>,
    pub val: Vec<Chunk>,
    pub test: Vec<Chunk>,
}

impl DatasetSplit {
    pub fn all(&self) -> impl Iterator<Item = &Chunk> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cuts frames into consecutive chunks and splits them in time order: the
/// first share trains, the next validates, the last tests.
pub fn chunk_and_split(
    frames: &[Frame],
    chunk_len: usize,
    ratios: (usize, usize, usize),
) -> Result<DatasetSplit> {
    if chunk_len == 0 {
        return Err(Error::InvalidConfig("chunk length must be >= 1".into()));
    }
    if frames.len() < chunk_len {
        return Err(Error::TooFewFrames {
            need: chunk_len,
            got: frames.len(),
        });
    }
    let indices: Vec<i64> = frames.iter().map(|f| f.index).collect();
    let windows = chunk_windows(&indices, chunk_len);
    if windows.is_empty() {
        return Err(Error::TooFewFrames {
            need: chunk_len,
            got: 0,
        });
    }
    let counts = split_counts(windows.len(), ratios);
    if counts.1 == 0 || counts.2 == 0 {
        log::warn!(
            "only {} chunks: train/val/test = {}/{}/{}",
            windows.len(),
            counts.0,
            counts.1,
            counts.2
        );
    }
    let mut out = DatasetSplit::default();
    for (id, range) in windows.into_iter().enumerate() {
        let split = split_for(id, counts);
        let chunk = Chunk::new(id, split, frames[range].to_vec(), chunk_len)?;
        match split {
            Split::Train => out.train.push(chunk),
            Split::Val => out.val.push(chunk),
            Split::Test => out.test.push(chunk),
        }
    }
    Ok(out)
}

pub fn chunk_and_split_default(frames: &[Frame]) -> Result<DatasetSplit> {
    chunk_and_split(frames, DEFAULT_CHUNK_LEN, (8, 1, 1))
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Split,
    /// Two groups start steering toward each other.
    MergeStart,
    /// The steering pair met and became one group.
    MergeDone,
    Spawn,
    Death,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedEvent {
    pub frame: usize,
    pub kind: EventKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthEvent {
    pub frame: usize,
    pub kind: EventKind,
    pub scripted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_groups: usize,
    pub min_groups: usize,
    pub max_groups: usize,
    /// Inclusive member-count range for new groups.
    pub agents_per_group: (usize, usize),
    /// Cruising speed, normalized units per frame.
    pub group_speed: f64,
    /// Per-frame heading noise (radians, standard deviation).
    pub turn_sigma: f64,
    pub merge_prob: f64,
    pub split_prob: f64,
    pub spawn_prob: f64,
    pub death_prob: f64,
    /// Stationary spread of members around their group center.
    pub jitter_sigma: f64,
    /// Speed of the two halves right after a split.
    pub split_speed: f64,
    /// Frames the halves keep `split_speed` before returning to cruising.
    pub split_boost_frames: usize,
    /// Approach speed of a merging pair.
    pub merge_speed: f64,
    /// Rally sites groups stay near; 0 lets groups roam freely.
    pub n_sites: usize,
    /// Distance from its site within which a group loiters.
    pub leash: f64,
    pub frames: usize,
    pub seed: u64,
    #[serde(default)]
    pub script: Vec<ScriptedEvent>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_groups: 6,
            min_groups: 4,
            max_groups: 8,
            agents_per_group: (4, 12),
            group_speed: 0.004,
            turn_sigma: 0.15,
            merge_prob: 0.004,
            split_prob: 0.004,
            spawn_prob: 0.002,
            death_prob: 0.002,
            jitter_sigma: 0.015,
            split_speed: 0.006,
            split_boost_frames: 15,
            merge_speed: 0.006,
            n_sites: 6,
            leash: 0.06,
            frames: 2000,
            seed: 0,
            script: Vec::new(),
        }
    }
}

impl SynthConfig {
    /// Random events off; one scripted split or merge per chunk, starting
    /// `EVENT_OFFSET` frames in so the event is visible before the forecast
    /// window opens.
    pub fn scripted_events(frames: usize, chunk_len: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            merge_prob: 0.0,
            split_prob: 0.0,
            spawn_prob: 0.0,
            death_prob: 0.0,
            frames,
            seed,
            script: alternating_script(frames, chunk_len, EVENT_OFFSET),
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, p) in [
            ("merge_prob", self.merge_prob),
            ("split_prob", self.split_prob),
            ("spawn_prob", self.spawn_prob),
            ("death_prob", self.death_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        for (name, v) in [
            ("group_speed", self.group_speed),
            ("split_speed", self.split_speed),
            ("merge_speed", self.merge_speed),
            ("jitter_sigma", self.jitter_sigma),
            ("turn_sigma", self.turn_sigma),
            ("leash", self.leash),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        let (lo, hi) = self.agents_per_group;
        if lo == 0 || lo > hi {
            return bad(format!("agents_per_group range {lo}..={hi} is empty or zero"));
        }
        if self.min_groups > self.max_groups || self.max_groups == 0 {
            return bad("need 1 <= max_groups and min_groups <= max_groups".into());
        }
        if self.n_groups == 0 || self.n_groups > self.max_groups {
            return bad(format!(
                "n_groups must be in 1..={}, got {}",
                self.max_groups, self.n_groups
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Group {
    id: u64,
    center: Point,
    heading: f64,
    /// Member offsets from the center.
    offsets: Vec<Point>,
    boost: usize,
    merge_with: Option<u64>,
    site: Option<usize>,
    /// Patrol direction around the site, +1 or -1.
    spin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub frames: Vec<Frame>,
    pub events: Vec<SynthEvent>,
}

pub const EVENT_OFFSET: usize = 20;

const MARGIN: f64 = 0.05;
const MERGE_DISTANCE: f64 = 0.02;
const OFFSET_MEMORY: f64 = 0.95;
const SITE_GAP: f64 = 0.25;
/// Patrol radius around a site, as a fraction of the leash.
const ORBIT: f64 = 0.6;
/// Patrol speed as a fraction of the cruising speed.
const PATROL: f64 = 0.5;

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

struct Sim<'a> {
    cfg: &'a SynthConfig,
    rng: rand_chacha::ChaCha8Rng,
    unit: Normal<f64>,
    groups: Vec<Group>,
    sites: Vec<Point>,
    next_id: u64,
    events: Vec<SynthEvent>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SynthConfig) -> Self {
        let mut sim = Sim {
            cfg,
            rng: seeded_rng(cfg.seed),
            unit: Normal::new(0.0, 1.0).expect("unit normal"),
            groups: Vec::new(),
            sites: Vec::new(),
            next_id: 0,
            events: Vec::new(),
        };
        let mut tries = 0;
        while sim.sites.len() < cfg.n_sites {
            let p = [sim.rng.random_range(0.15..0.85), sim.rng.random_range(0.15..0.85)];
            tries += 1;
            if tries > 1000 || sim.sites.iter().all(|s| dist(*s, p) >= SITE_GAP) {
                sim.sites.push(p);
            }
        }
        for i in 0..cfg.n_groups {
            let site = (cfg.n_sites > 0).then(|| i % cfg.n_sites);
            let g = sim.new_group(site);
            sim.groups.push(g);
        }
        sim
    }

    fn gauss(&mut self) -> f64 {
        self.unit.sample(&mut self.rng)
    }

    fn new_group(&mut self, site: Option<usize>) -> Group {
        let (lo, hi) = self.cfg.agents_per_group;
        let n = self.rng.random_range(lo..=hi);
        let sigma = self.cfg.jitter_sigma;
        let offsets = (0..n)
            .map(|_| [sigma * self.gauss(), sigma * self.gauss()])
            .collect();
        let center = match site {
            Some(s) => {
                let r = self.cfg.leash;
                let base = self.sites[s];
                [
                    (base[0] + self.rng.random_range(-r..=r) / 2.0).clamp(MARGIN, 1.0 - MARGIN),
                    (base[1] + self.rng.random_range(-r..=r) / 2.0).clamp(MARGIN, 1.0 - MARGIN),
                ]
            }
            None => [
                self.rng.random_range(0.1..0.9),
                self.rng.random_range(0.1..0.9),
            ],
        };
        let heading = self.rng.random_range(0.0..std::f64::consts::TAU);
        self.next_id += 1;
        Group {
            id: self.next_id,
            center,
            heading,
            offsets,
            boost: 0,
            merge_with: None,
            site,
            spin: if self.rng.random::<bool>() { 1.0 } else { -1.0 },
        }
    }

    fn nearest_site(&self, p: Point) -> Option<usize> {
        (0..self.sites.len()).min_by(|&a, &b| dist(self.sites[a], p).total_cmp(&dist(self.sites[b], p)))
    }

    fn log(&mut self, frame: usize, kind: EventKind, scripted: bool) {
        self.events.push(SynthEvent {
            frame,
            kind,
            scripted,
        });
    }

    fn try_split(&mut self) -> bool {
        if self.groups.len() >= self.cfg.max_groups {
            return false;
        }
        let Some(idx) = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.offsets.len() >= 2 && g.merge_with.is_none())
            .max_by_key(|(_, g)| g.offsets.len())
            .map(|(i, _)| i)
        else {
            return false;
        };
        // the departing half heads for the nearest other site, or a random
        // direction when there is none
        let home = self.groups[idx].site;
        let c = self.groups[idx].center;
        let target = (0..self.sites.len())
            .filter(|&s| Some(s) != home)
            .min_by(|&a, &b| dist(self.sites[a], c).total_cmp(&dist(self.sites[b], c)));
        let axis = match target {
            Some(t) => {
                let (c, p) = (self.groups[idx].center, self.sites[t]);
                (p[1] - c[1]).atan2(p[0] - c[0])
            }
            None => self.rng.random_range(0.0..std::f64::consts::TAU),
        };
        let dir = [axis.cos(), axis.sin()];
        let parent = &mut self.groups[idx];
        let mut members: Vec<Point> = parent
            .offsets
            .iter()
            .map(|o| [parent.center[0] + o[0], parent.center[1] + o[1]])
            .collect();
        let proj = |p: &Point| p[0] * dir[0] + p[1] * dir[1];
        members.sort_by(|a, b| proj(a).total_cmp(&proj(b)));
        let half = members.len() / 2;
        let back = members.split_off(half);

        let rebase = |pts: &[Point]| -> (Point, Vec<Point>) {
            let n = pts.len() as f64;
            let c = [
                pts.iter().map(|p| p[0]).sum::<f64>() / n,
                pts.iter().map(|p| p[1]).sum::<f64>() / n,
            ];
            (c, pts.iter().map(|p| [p[0] - c[0], p[1] - c[1]]).collect())
        };
        let (c_front, o_front) = rebase(&members);
        let (c_back, o_back) = rebase(&back);
        parent.center = c_front;
        parent.offsets = o_front;
        if target.is_none() {
            parent.heading = axis + std::f64::consts::PI;
            parent.boost = self.cfg.split_boost_frames;
        }

        self.next_id += 1;
        let child = Group {
            id: self.next_id,
            center: c_back,
            heading: axis,
            offsets: o_back,
            boost: self.cfg.split_boost_frames,
            merge_with: None,
            site: target.or(home),
            spin: -self.groups[idx].spin,
        };
        self.groups.push(child);
        true
    }

    fn try_merge_start(&mut self) -> bool {
        let free: Vec<usize> = (0..self.groups.len())
            .filter(|&i| self.groups[i].merge_with.is_none())
            .collect();
        let pairs_merging = self.groups.iter().filter(|g| g.merge_with.is_some()).count() / 2;
        // groups left once every pending merge completes
        if self.groups.len() - pairs_merging <= self.cfg.min_groups.max(1) || free.len() < 2 {
            return false;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for (a, &i) in free.iter().enumerate() {
            for &j in &free[a + 1..] {
                let (ci, cj) = (self.groups[i].center, self.groups[j].center);
                let d = (ci[0] - cj[0]).hypot(ci[1] - cj[1]);
                if best.is_none_or(|b| d < b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        let Some((i, j, _)) = best else { return false };
        let (id_i, id_j) = (self.groups[i].id, self.groups[j].id);
        self.groups[i].merge_with = Some(id_j);
        self.groups[j].merge_with = Some(id_i);
        true
    }

    fn try_spawn(&mut self) -> bool {
        if self.groups.len() >= self.cfg.max_groups {
            return false;
        }
        let site = (!self.sites.is_empty()).then(|| self.rng.random_range(0..self.sites.len()));
        let g = self.new_group(site);
        self.groups.push(g);
        true
    }

    fn try_death(&mut self) -> bool {
        let pending = self.groups.iter().filter(|g| g.merge_with.is_some()).count() / 2;
        if self.groups.len() - pending <= self.cfg.min_groups.max(1) {
            return false;
        }
        let candidates: Vec<usize> = (0..self.groups.len())
            .filter(|&i| self.groups[i].merge_with.is_none())
            .collect();
        let Some(&idx) = candidates.choose(&mut self.rng) else {
            return false;
        };
        self.groups.remove(idx);
        true
    }

    fn apply(&mut self, frame: usize, kind: EventKind, scripted: bool) {
        let done = match kind {
            EventKind::Split => self.try_split(),
            EventKind::MergeStart | EventKind::MergeDone => self.try_merge_start(),
            EventKind::Spawn => self.try_spawn(),
            EventKind::Death => self.try_death(),
        };
        if done {
            let kind = match kind {
                EventKind::MergeDone => EventKind::MergeStart,
                k => k,
            };
            self.log(frame, kind, scripted);
        }
    }

    fn step(&mut self, frame: usize) {
        let cfg = self.cfg;
        for ev in cfg.script.iter().filter(|e| e.frame == frame) {
            self.apply(frame, ev.kind, true);
        }
        for (kind, p) in [
            (EventKind::Split, cfg.split_prob),
            (EventKind::MergeStart, cfg.merge_prob),
            (EventKind::Spawn, cfg.spawn_prob),
            (EventKind::Death, cfg.death_prob),
        ] {
            if p > 0.0 && self.rng.random::<f64>() < p {
                self.apply(frame, kind, false);
            }
        }

        let centers: BTreeMap<u64, Point> = self.groups.iter().map(|g| (g.id, g.center)).collect();
        for gi in 0..self.groups.len() {
            let noise = cfg.turn_sigma * self.gauss();
            let home = self.groups[gi].site.map(|s| self.sites[s]);
            let g = &mut self.groups[gi];
            let speed = if let Some(partner) = g.merge_with.and_then(|id| centers.get(&id)) {
                g.heading = (partner[1] - g.center[1]).atan2(partner[0] - g.center[0]);
                cfg.group_speed.max(cfg.merge_speed)
            } else if g.boost > 0 {
                g.boost -= 1;
                cfg.group_speed.max(cfg.split_speed)
            } else if let Some(h) = home {
                if dist(h, g.center) > cfg.leash {
                    g.heading = (h[1] - g.center[1]).atan2(h[0] - g.center[0]) + 0.3 * noise;
                    cfg.group_speed
                } else {
                    // patrol a circle around the site
                    let r0 = ORBIT * cfg.leash;
                    let theta = (g.center[1] - h[1]).atan2(g.center[0] - h[0])
                        + g.spin * PATROL * cfg.group_speed / r0.max(1e-9);
                    let target = [h[0] + r0 * theta.cos(), h[1] + r0 * theta.sin()];
                    g.heading = (target[1] - g.center[1]).atan2(target[0] - g.center[0]);
                    cfg.group_speed.min(dist(target, g.center))
                }
            } else {
                g.heading += noise;
                cfg.group_speed
            };
            g.center[0] += speed * g.heading.cos();
            g.center[1] += speed * g.heading.sin();
            if g.merge_with.is_none() {
                reflect(&mut g.center, &mut g.heading);
            }
        }

        self.complete_merges(frame);

        let keep = OFFSET_MEMORY;
        let fresh = (1.0 - keep * keep).sqrt() * cfg.jitter_sigma;
        for gi in 0..self.groups.len() {
            for oi in 0..self.groups[gi].offsets.len() {
                let (nx, ny) = (self.gauss(), self.gauss());
                let o = &mut self.groups[gi].offsets[oi];
                o[0] = keep * o[0] + fresh * nx;
                o[1] = keep * o[1] + fresh * ny;
            }
        }
    }

    fn complete_merges(&mut self, frame: usize) {
        let mut i = 0;
        while i < self.groups.len() {
            let Some(partner) = self.groups[i].merge_with else {
                i += 1;
                continue;
            };
            let Some(j) = self.groups.iter().position(|g| g.id == partner) else {
                self.groups[i].merge_with = None;
                i += 1;
                continue;
            };
            let (a, b) = (self.groups[i].center, self.groups[j].center);
            if (a[0] - b[0]).hypot(a[1] - b[1]) > MERGE_DISTANCE {
                i += 1;
                continue;
            }
            let other = self.groups[j].clone();
            let near = self.nearest_site([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
            let g = &mut self.groups[i];
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let mut offsets: Vec<Point> = g
                .offsets
                .iter()
                .map(|o| [a[0] + o[0] - mid[0], a[1] + o[1] - mid[1]])
                .collect();
            offsets.extend(
                other
                    .offsets
                    .iter()
                    .map(|o| [b[0] + o[0] - mid[0], b[1] + o[1] - mid[1]]),
            );
            g.center = mid;
            g.offsets = offsets;
            g.merge_with = None;
            g.boost = 0;
            g.site = near.or(g.site);
            self.groups.remove(j);
            self.log(frame, EventKind::MergeDone, false);
            if j < i {
                i -= 1;
            }
            i += 1;
        }
    }

    fn snapshot(&self, index: usize) -> Frame {
        let agents = self
            .groups
            .iter()
            .flat_map(|g| {
                g.offsets.iter().map(move |o| {
                    [
                        (g.center[0] + o[0]).clamp(0.0, 1.0),
                        (g.center[1] + o[1]).clamp(0.0, 1.0),
                    ]
                })
            })
            .collect();
        Frame::new(index as i64, agents)
    }
}

fn reflect(center: &mut Point, heading: &mut f64) {
    let (lo, hi) = (MARGIN, 1.0 - MARGIN);
    if center[0] < lo || center[0] > hi {
        center[0] = if center[0] < lo { 2.0 * lo - center[0] } else { 2.0 * hi - center[0] };
        *heading = std::f64::consts::PI - *heading;
    }
    if center[1] < lo || center[1] > hi {
        center[1] = if center[1] < lo { 2.0 * lo - center[1] } else { 2.0 * hi - center[1] };
        *heading = -*heading;
    }
}

/// Simulates moving agent groups and records every structural event.
pub fn synth_scenario_with_events(config: &SynthConfig) -> Result<Scenario> {
    config.validate()?;
    let mut sim = Sim::new(config);
    let mut frames = Vec::with_capacity(config.frames);
    for f in 0..config.frames {
        sim.step(f);
        frames.push(sim.snapshot(f));
    }
    Ok(Scenario {
        frames,
        events: sim.events,
    })
}

pub fn synth_scenario(config: &SynthConfig) -> Result<Vec<Frame>> {
    synth_scenario_with_events(config).map(|s| s.frames)
}

/// One scripted event per chunk, alternating split and merge, placed
/// `offset` frames into the chunk.
pub fn alternating_script(frames: usize, chunk_len: usize, offset: usize) -> Vec<ScriptedEvent> {
    (0..frames / chunk_len.max(1))
        .map(|c| ScriptedEvent {
            frame: c * chunk_len + offset,
            kind: if c % 2 == 0 {
                EventKind::Split
            } else {
                EventKind::MergeStart
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> Vec<Frame> {
        (0..n as i64).map(|i| Frame::new(i, vec![[0.5, 0.5]])).collect()
    }

    #[test]
    fn jsonl_is_normalized() {
        let text = r#"{"t": 0, "agents": [[128, 64]]}
{"t": 1, "agents": [], "player": []}
"#;
        let f = parse_jsonl(text, 256.0, "mem").unwrap();
        assert_eq!(f[0].agents, vec![[0.5, 0.25]]);
        assert!(f[1].agents.is_empty());
    }

    #[test]
    fn csv_groups_rows_by_frame() {
        let text = "t,x,y,player\n3,128,64,1\n2,0,0,2\n3,256,256,2\n";
        let f = parse_csv(text, 256.0, "mem").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].index, 2);
        assert_eq!(f[1].agents, vec![[0.5, 0.25], [1.0, 1.0]]);
        assert_eq!(f[1].players, vec![1, 2]);
    }

    #[test]
    fn load_errors() {
        assert!(parse_jsonl("", 256.0, "mem").unwrap().is_empty());
        assert!(matches!(
            parse_jsonl(r#"{"t": 0, "agents": [[300, 10]]}"#, 256.0, "mem"),
            Err(Error::CoordinateOutOfRange { .. })
        ));
        let dup = "{\"t\": 4, \"agents\": []}\n{\"t\": 4, \"agents\": []}\n";
        assert!(matches!(parse_jsonl(dup, 256.0, "mem"), Err(Error::DuplicateFrame(4))));
        assert!(matches!(
            parse_jsonl("{\"t\": 1", 256.0, "mem"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_csv("t,x,y\n1,2\n", 256.0, "mem"), Err(Error::Parse { .. })));
    }

    #[test]
    fn eleven_thousand_frame_split() {
        let s = chunk_and_split_default(&frames(11_000)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (176, 22, 22));
        assert_eq!(s.train[0].start_frame(), 0);
        assert_eq!(s.val[0].start_frame(), 8800);
        assert_eq!(s.test[0].start_frame(), 9900);
    }

    #[test]
    fn small_splits() {
        let s = chunk_and_split_default(&frames(100)).unwrap();
        assert_eq!(s.len(), 2);
        assert!(matches!(
            chunk_and_split_default(&frames(49)),
            Err(Error::TooFewFrames { need: 50, got: 49 })
        ));
    }

    #[test]
    fn windows_restart_at_gaps() {
        let idx = [0, 1, 2, 4, 5, 6, 7, 8, 9, 10];
        assert_eq!(chunk_windows(&idx, 3), vec![0..3, 3..6, 6..9]);
        let idx = [0, 1, 3, 4, 5];
        assert_eq!(chunk_windows(&idx, 3), vec![2..5]);
    }

    #[test]
    fn static_scene_is_constant() {
        let cfg = SynthConfig {
            n_groups: 1,
            min_groups: 1,
            max_groups: 1,
            group_speed: 0.0,
            merge_prob: 0.0,
            split_prob: 0.0,
            spawn_prob: 0.0,
            death_prob: 0.0,
            jitter_sigma: 0.0,
            frames: 30,
            ..Default::default()
        };
        let f = synth_scenario(&cfg).unwrap();
        assert!(f.windows(2).all(|w| w[0].agents == w[1].agents));
    }

    #[test]
    fn synth_is_seeded_and_in_range() {
        let cfg = SynthConfig {
            frames: 400,
            seed: 42,
            ..Default::default()
        };
        let a = synth_scenario_with_events(&cfg).unwrap();
        let b = synth_scenario_with_events(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a
            .frames
            .iter()
            .all(|f| f.agents.iter().flatten().all(|v| (0.0..=1.0).contains(v))));
        let c = synth_scenario(&SynthConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.frames, c);
    }

    #[test]
    fn scripted_events_fire_and_merges_complete() {
        let cfg = SynthConfig {
            frames: 400,
            merge_prob: 0.0,
            split_prob: 0.0,
            spawn_prob: 0.0,
            death_prob: 0.0,
            script: alternating_script(400, 50, 10),
            ..Default::default()
        };
        let s = synth_scenario_with_events(&cfg).unwrap();
        let count = |k| s.events.iter().filter(|e| e.kind == k).count();
        assert_eq!(count(EventKind::Split), 4);
        assert_eq!(count(EventKind::MergeStart), 4);
        assert!(count(EventKind::MergeDone) >= 3);
        // agent count is conserved without spawn/death
        let n0 = s.frames[0].agents.len();
        assert!(s.frames.iter().all(|f| f.agents.len() == n0));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SynthConfig {
            merge_prob: 1.5,
            ..Default::default()
        };
        assert!(matches!(synth_scenario(&cfg), Err(Error::InvalidConfig(_))));
        let cfg = SynthConfig {
            group_speed: -1.0,
            ..Default::default()
        };
        assert!(synth_scenario(&cfg).is_err());
    }
}
