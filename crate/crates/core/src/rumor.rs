//! Gillespie simulation of the rumor scotching process.
//!
//! Each vertex is Susceptible, Infected or Recovered and carries a blamer set
//! `A_v` of the vertices that infected it. An infected `i` infects every
//! non-recovered neighbour `j` at rate `lambda / scale`, adding `i` to `A_j`
//! (a re-infection of an already infected `j` is a real event that only
//! touches `A_j`). An infected `j` recovers at rate equal to the number of
//! recovered vertices in `A_j`; on recovery `A_j` is emptied.
//!
//! On the graph `G_n` (complete graph on `1..=n` plus the pendant edge
//! `(0, 1)`), vertex 0 starts recovered and vertex 1 starts infected with
//! `A_1 = {0}`. Total rates are kept incrementally: infection on `G_n` is
//! `I * (M - 1)` proposals with `M` the non-recovered count, explicit graphs
//! keep per-vertex counts of non-recovered neighbours in a Fenwick tree, and
//! recovery weights live in a second Fenwick tree.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fenwick::Fenwick;
use crate::model::{CensorPolicy, SeedSpec};
use crate::replicas::try_run_replicas;
use crate::stats::Censorable;

/// Undirected simple graph on vertices `0..vertex_count()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn from_edges(vertex_count: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); vertex_count];
        for &(u, v) in edges {
            if u as usize >= vertex_count || v as usize >= vertex_count {
                return Err(Error::Topology(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::Topology(format!("self-loop at {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    /// Parses an edge list: one `u v` pair per line, 0-based ids,
    /// undirected. Blank lines and `#` comments are ignored. The vertex set
    /// is `0..=max id`.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_id = 0u32;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32> {
                tok.ok_or_else(|| Error::Topology(format!("line {}: expected two ids", lineno + 1)))?
                    .parse::<u32>()
                    .map_err(|e| Error::Topology(format!("line {}: {e}", lineno + 1)))
            };
            let u = parse(parts.next())?;
            let v = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Topology(format!("line {}: trailing tokens", lineno + 1)));
            }
            max_id = max_id.max(u).max(v);
            edges.push((u, v));
        }
        if edges.is_empty() {
            return Err(Error::Topology("edge list is empty".into()));
        }
        Self::from_edges(max_id as usize + 1, &edges)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Topology(format!("{}: {e}", path.display())))?;
        Self::parse_edge_list(&text)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn is_connected(&self) -> bool {
        if self.adj.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v as usize] {
                if !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.adj.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    /// Complete graph on `1..=n` plus the edge `(0, 1)`.
    CompletePendant,
    Explicit(Graph),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitMode {
    /// Vertex 0 recovered, vertex 1 infected with `A_1 = {0}`, rest susceptible.
    Paper,
    /// Same statuses, every `A_v` preset to all neighbours (chase-escape).
    FullBlame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RumorConfig {
    /// Vertices are `0..=n`; vertex 0 is auxiliary.
    pub n: usize,
    pub lambda: f64,
    pub topology: Topology,
    /// Infection rate per edge is `lambda / infection_scale`.
    pub infection_scale: f64,
    pub init_mode: InitMode,
}

impl RumorConfig {
    /// The graph `G_n` with per-edge infection rate `lambda / n`.
    pub fn complete(n: usize, lambda: f64) -> Self {
        Self {
            n,
            lambda,
            topology: Topology::CompletePendant,
            infection_scale: n as f64,
            init_mode: InitMode::Paper,
        }
    }

    /// An explicit graph with per-edge infection rate `lambda`.
    pub fn explicit(graph: Graph, lambda: f64) -> Self {
        Self {
            n: graph.vertex_count().saturating_sub(1),
            lambda,
            topology: Topology::Explicit(graph),
            infection_scale: 1.0,
            init_mode: InitMode::Paper,
        }
    }

    pub fn with_init(mut self, init_mode: InitMode) -> Self {
        self.init_mode = init_mode;
        self
    }

    pub fn with_infection_scale(mut self, scale: f64) -> Self {
        self.infection_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n >= u32::MAX as usize {
            return domain(format!("n must be in [1, 2^32 - 1), got {}", self.n));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.infection_scale > 0.0 && self.infection_scale.is_finite()) {
            return domain(format!(
                "infection scale must be positive, got {}",
                self.infection_scale
            ));
        }
        if let Topology::Explicit(g) = &self.topology {
            if g.vertex_count() != self.n + 1 {
                return domain(format!(
                    "graph has {} vertices, expected n + 1 = {}",
                    g.vertex_count(),
                    self.n + 1
                ));
            }
            if !g.is_connected() {
                return domain("topology is not connected");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Susceptible,
    Infected,
    Recovered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Blamers {
    /// Every neighbour.
    All,
    Listed(Vec<u32>),
}

impl Blamers {
    pub fn contains(&self, v: u32) -> bool {
        match self {
            Blamers::All => true,
            Blamers::Listed(list) => list.contains(&v),
        }
    }
}

/// Vertex subset with O(1) insert, remove and uniform pick.
#[derive(Debug, Clone)]
struct IndexSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IndexSet {
    fn empty(universe: usize) -> Self {
        Self {
            items: Vec::new(),
            pos: vec![ABSENT; universe],
        }
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != ABSENT
    }

    fn insert(&mut self, v: u32) {
        if !self.contains(v) {
            self.pos[v as usize] = self.items.len() as u32;
            self.items.push(v);
        }
    }

    fn remove(&mut self, v: u32) {
        let p = self.pos[v as usize];
        if p == ABSENT {
            return;
        }
        let last = *self.items.last().expect("non-empty");
        self.items.swap_remove(p as usize);
        if last != v {
            self.pos[last as usize] = p;
        }
        self.pos[v as usize] = ABSENT;
    }
}

/// CTMC state plus the incremental bookkeeping behind the event rates.
#[derive(Debug, Clone)]
pub struct RumorState {
    status: Vec<Status>,
    blamers: Vec<Blamers>,
    /// `r_v`: recovered members of `A_v`, kept for every non-recovered vertex.
    recovered_blamers: Vec<u32>,
    /// `holders[u]`: vertices whose listed blamer set contains `u`.
    holders: Vec<Vec<u32>>,
    infected: IndexSet,
    /// Complete topology only: non-recovered vertices among `1..=n`.
    non_recovered: IndexSet,
    /// Explicit topology only: non-recovered neighbour counts.
    open_neighbors: Vec<u32>,
    /// Explicit topology only: `open_neighbors` of infected vertices.
    infection_weights: Fenwick,
    recovery_weights: Fenwick,
    /// Vertex whose recovery is scheduled deterministically.
    pinned: Option<u32>,
}

impl RumorState {
    pub fn status(&self, v: u32) -> Status {
        self.status[v as usize]
    }

    pub fn blamers(&self, v: u32) -> &Blamers {
        &self.blamers[v as usize]
    }

    pub fn recovery_rate(&self, v: u32) -> u32 {
        if self.status[v as usize] == Status::Infected {
            self.recovered_blamers[v as usize]
        } else {
            0
        }
    }

    pub fn infected_count(&self) -> usize {
        self.infected.len()
    }

    pub fn is_absorbing(&self) -> bool {
        self.infected.len() == 0
    }

    pub fn vertex_count(&self) -> usize {
        self.status.len()
    }

    /// Recovered vertices among `1..=n`.
    pub fn recovered_count(&self) -> u64 {
        self.status[1..]
            .iter()
            .filter(|s| **s == Status::Recovered)
            .count() as u64
    }
}

fn for_each_neighbor(topology: &Topology, n: usize, v: u32, mut f: impl FnMut(u32)) {
    match topology {
        Topology::Explicit(g) => g.neighbors(v).iter().copied().for_each(f),
        Topology::CompletePendant => {
            if v == 0 {
                f(1);
                return;
            }
            if v == 1 {
                f(0);
            }
            for u in 1..=n as u32 {
                if u != v {
                    f(u);
                }
            }
        }
    }
}

/// Initial state of the chain. Validates the configuration.
pub fn init_state(config: &RumorConfig) -> Result<RumorState> {
    config.validate()?;
    Ok(build_state(config, None))
}

fn build_state(config: &RumorConfig, pinned: Option<u32>) -> RumorState {
    let size = config.n + 1;
    let mut status = vec![Status::Susceptible; size];
    status[0] = Status::Recovered;
    status[1] = Status::Infected;

    let mut blamers = vec![Blamers::Listed(Vec::new()); size];
    let mut holders = vec![Vec::new(); size];
    let mut recovered_blamers = vec![0u32; size];
    match config.init_mode {
        InitMode::Paper => {
            blamers[1] = Blamers::Listed(vec![0]);
            holders[0].push(1);
            recovered_blamers[1] = 1;
        }
        InitMode::FullBlame => {
            for v in 0..size {
                blamers[v] = Blamers::All;
            }
            for_each_neighbor(&config.topology, config.n, 0, |u| {
                recovered_blamers[u as usize] += 1;
            });
        }
    }

    let mut infected = IndexSet::empty(size);
    infected.insert(1);

    let (non_recovered, open_neighbors, infection_weights) = match &config.topology {
        Topology::CompletePendant => {
            let items: Vec<u32> = (1..size as u32).collect();
            let mut pos = vec![ABSENT; size];
            for (i, v) in items.iter().enumerate() {
                pos[*v as usize] = i as u32;
            }
            (IndexSet { items, pos }, Vec::new(), Fenwick::new(0))
        }
        Topology::Explicit(g) => {
            let open: Vec<u32> = (0..size as u32)
                .map(|v| {
                    g.neighbors(v)
                        .iter()
                        .filter(|u| status[**u as usize] != Status::Recovered)
                        .count() as u32
                })
                .collect();
            let mut fw = Fenwick::new(size);
            fw.set(1, open[1] as u64);
            (IndexSet::empty(0), open, fw)
        }
    };

    let mut recovery_weights = Fenwick::new(size);
    if pinned != Some(1) {
        recovery_weights.set(1, recovered_blamers[1] as u64);
    }

    RumorState {
        status,
        blamers,
        recovered_blamers,
        holders,
        infected,
        non_recovered,
        open_neighbors,
        infection_weights,
        recovery_weights,
        pinned,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RumorEventKind {
    Infection { from: u32, to: u32 },
    Recovery { vertex: u32 },
    /// Deterministic recovery of vertex 1 at the conditioning time.
    ForcedRecovery { vertex: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RumorEvent {
    pub time: f64,
    pub kind: RumorEventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RumorOutcome {
    /// Recovered vertices among `1..=n` when the run stopped.
    pub n_recovered: u64,
    pub absorption_time: f64,
    pub censored: bool,
    /// Stochastic events (infections and recoveries) executed.
    pub events: u64,
    pub trajectory: Option<Vec<RumorEvent>>,
}

impl Censorable for RumorOutcome {
    fn is_censored(&self) -> bool {
        self.censored
    }
}

/// A validated configuration, reusable across runs.
#[derive(Debug, Clone)]
pub struct RumorSim {
    config: RumorConfig,
}

impl RumorSim {
    pub fn new(config: RumorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &RumorConfig {
        &self.config
    }

    /// A chain positioned at the initial state. With `forced_root_recovery =
    /// Some(t)`, vertex 1 has no stochastic recovery clock and recovers at `t`.
    pub fn process(&self, forced_root_recovery: Option<f64>) -> Result<RumorProcess<'_>> {
        if let Some(t) = forced_root_recovery {
            if !(t.is_finite() && t >= 0.0) {
                return domain(format!("forced recovery time must be finite and >= 0, got {t}"));
            }
        }
        Ok(RumorProcess {
            config: &self.config,
            state: build_state(&self.config, forced_root_recovery.map(|_| 1)),
            now: 0.0,
            forced: forced_root_recovery,
            events: 0,
        })
    }

    pub fn run(
        &self,
        policy: &CensorPolicy,
        seed: SeedSpec,
        forced_root_recovery: Option<f64>,
        record: bool,
    ) -> Result<RumorOutcome> {
        policy.validate()?;
        let mut proc = self.process(forced_root_recovery)?;
        let mut rng = seed.rng();
        let mut log = record.then(Vec::new);
        let mut censored = false;
        loop {
            if proc.state.is_absorbing() {
                break;
            }
            if proc.events >= policy.max_particles {
                censored = true;
                break;
            }
            match proc.step(&mut rng, policy.max_time) {
                Some(ev) => {
                    if let Some(log) = log.as_mut() {
                        log.push(ev);
                    }
                }
                None => {
                    censored = true;
                    break;
                }
            }
        }
        Ok(RumorOutcome {
            n_recovered: proc.state.recovered_count(),
            absorption_time: proc.now,
            censored,
            events: proc.events,
            trajectory: log,
        })
    }
}

/// A running chain; [`RumorProcess::step`] executes one event.
#[derive(Debug)]
pub struct RumorProcess<'a> {
    config: &'a RumorConfig,
    state: RumorState,
    now: f64,
    forced: Option<f64>,
    events: u64,
}

impl RumorProcess<'_> {
    pub fn state(&self) -> &RumorState {
        &self.state
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    fn infection_rate_per_edge(&self) -> f64 {
        self.config.lambda / self.config.infection_scale
    }

    /// Number of (infected, non-recovered neighbour) pairs.
    fn infection_proposals(&self) -> u64 {
        match self.config.topology {
            Topology::CompletePendant => {
                let m = self.state.non_recovered.len() as u64;
                self.state.infected.len() as u64 * m.saturating_sub(1)
            }
            Topology::Explicit(_) => self.state.infection_weights.total(),
        }
    }

    /// Total infection and recovery rates.
    pub fn rates(&self) -> (f64, f64) {
        (
            self.infection_rate_per_edge() * self.infection_proposals() as f64,
            self.state.recovery_weights.total() as f64,
        )
    }

    /// Advances by one event. Returns `None` without changing the state when
    /// the next event would fall after `max_time`. Must not be called on an
    /// absorbing state.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, max_time: f64) -> Option<RumorEvent> {
        debug_assert!(!self.state.is_absorbing());
        let (inf, rec) = self.rates();
        let total = inf + rec;
        let wait = if total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / total
        } else {
            f64::INFINITY
        };
        if let Some(tf) = self.forced {
            if self.now + wait >= tf {
                if tf > max_time {
                    return None;
                }
                self.now = tf;
                self.forced = None;
                self.state.pinned = None;
                self.recover(1);
                return Some(RumorEvent {
                    time: tf,
                    kind: RumorEventKind::ForcedRecovery { vertex: 1 },
                });
            }
        }
        let next = self.now + wait;
        if !(next <= max_time) {
            return None;
        }
        self.now = next;
        self.events += 1;
        let pick = rng.random::<f64>() * total;
        let kind = if pick < inf || rec == 0.0 {
            let (from, to) = self.pick_infection(rng);
            self.infect(from, to);
            RumorEventKind::Infection { from, to }
        } else {
            let w = self.state.recovery_weights.total();
            let target = rng.random_range(0..w);
            let vertex = self.state.recovery_weights.find(target) as u32;
            self.recover(vertex);
            RumorEventKind::Recovery { vertex }
        };
        Some(RumorEvent {
            time: self.now,
            kind,
        })
    }

    fn pick_infection<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        let st = &self.state;
        match &self.config.topology {
            Topology::CompletePendant => {
                let from = st.infected.items[rng.random_range(0..st.infected.len())];
                let m = st.non_recovered.len();
                let idx = rng.random_range(0..m - 1);
                let mut to = st.non_recovered.items[idx];
                if to == from {
                    to = st.non_recovered.items[m - 1];
                }
                (from, to)
            }
            Topology::Explicit(g) => {
                let w = st.infection_weights.total();
                let from = st.infection_weights.find(rng.random_range(0..w)) as u32;
                let mut k = rng.random_range(0..st.open_neighbors[from as usize]);
                for &u in g.neighbors(from) {
                    if st.status[u as usize] != Status::Recovered {
                        if k == 0 {
                            return (from, u);
                        }
                        k -= 1;
                    }
                }
                unreachable!("open neighbour count out of sync")
            }
        }
    }

    fn refresh_recovery_weight(&mut self, v: u32) {
        let st = &mut self.state;
        let w = if st.status[v as usize] == Status::Infected && st.pinned != Some(v) {
            st.recovered_blamers[v as usize] as u64
        } else {
            0
        };
        st.recovery_weights.set(v as usize, w);
    }

    fn infect(&mut self, from: u32, to: u32) {
        let explicit = matches!(self.config.topology, Topology::Explicit(_));
        let st = &mut self.state;
        let newly = st.status[to as usize] == Status::Susceptible;
        if newly {
            st.status[to as usize] = Status::Infected;
            st.infected.insert(to);
            if explicit {
                let w = st.open_neighbors[to as usize] as u64;
                st.infection_weights.set(to as usize, w);
            }
        }
        if let Blamers::Listed(list) = &mut st.blamers[to as usize] {
            if !list.contains(&from) {
                list.push(from);
                st.holders[from as usize].push(to);
                if st.status[from as usize] == Status::Recovered {
                    st.recovered_blamers[to as usize] += 1;
                }
            }
        }
        self.refresh_recovery_weight(to);
    }

    fn recover(&mut self, v: u32) {
        let vi = v as usize;
        {
            let st = &mut self.state;
            st.status[vi] = Status::Recovered;
            st.infected.remove(v);
            st.blamers[vi] = Blamers::Listed(Vec::new());
            st.recovered_blamers[vi] = 0;
            st.recovery_weights.set(vi, 0);
        }
        let n = self.config.n;
        match &self.config.topology {
            Topology::CompletePendant => self.state.non_recovered.remove(v),
            Topology::Explicit(g) => {
                let st = &mut self.state;
                st.infection_weights.set(vi, 0);
                for &u in g.neighbors(v) {
                    let ui = u as usize;
                    st.open_neighbors[ui] -= 1;
                    if st.status[ui] == Status::Infected {
                        st.infection_weights.set(ui, st.open_neighbors[ui] as u64);
                    }
                }
            }
        }

        let holders = std::mem::take(&mut self.state.holders[vi]);
        for u in holders {
            if self.state.status[u as usize] != Status::Recovered {
                self.state.recovered_blamers[u as usize] += 1;
                self.refresh_recovery_weight(u);
            }
        }
        if self.config.init_mode == InitMode::FullBlame {
            let mut touched = Vec::new();
            for_each_neighbor(&self.config.topology, n, v, |u| {
                let st = &self.state;
                if st.status[u as usize] != Status::Recovered
                    && st.blamers[u as usize] == Blamers::All
                {
                    touched.push(u);
                }
            });
            for u in touched {
                self.state.recovered_blamers[u as usize] += 1;
                self.refresh_recovery_weight(u);
            }
        }
    }

    /// Recomputes every rate ingredient from the raw statuses and blamer
    /// sets and compares with the incremental bookkeeping.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let st = &self.state;
        let size = st.status.len();
        let n = self.config.n;
        let mut proposals = 0u64;
        for v in 0..size as u32 {
            let vi = v as usize;
            let s = st.status[vi];
            if (s == Status::Infected) != st.infected.contains(v) {
                return Err(format!("infected set out of sync at {v}"));
            }
            let mut open = 0u32;
            let mut rec_blamers = 0u32;
            for_each_neighbor(&self.config.topology, n, v, |u| {
                if st.status[u as usize] != Status::Recovered {
                    open += 1;
                }
            });
            match &st.blamers[vi] {
                Blamers::All => for_each_neighbor(&self.config.topology, n, v, |u| {
                    if st.status[u as usize] == Status::Recovered {
                        rec_blamers += 1;
                    }
                }),
                Blamers::Listed(list) => {
                    for &u in list {
                        if st.status[u as usize] == Status::Recovered {
                            rec_blamers += 1;
                        }
                    }
                }
            }
            if s == Status::Recovered {
                if st.recovery_weights.weight(vi) != 0 {
                    return Err(format!("recovered vertex {v} has a recovery weight"));
                }
                if st.blamers[vi] != Blamers::Listed(Vec::new()) && v != 0 {
                    return Err(format!("recovered vertex {v} keeps blamers"));
                }
                continue;
            }
            if st.recovered_blamers[vi] != rec_blamers {
                return Err(format!(
                    "r_{v} = {} but recount gives {rec_blamers}",
                    st.recovered_blamers[vi]
                ));
            }
            let expected_w = if s == Status::Infected && st.pinned != Some(v) {
                rec_blamers as u64
            } else {
                0
            };
            if st.recovery_weights.weight(vi) != expected_w {
                return Err(format!("recovery weight of {v} out of sync"));
            }
            if s == Status::Infected {
                proposals += open as u64;
            }
            if let Topology::Explicit(_) = self.config.topology {
                if st.open_neighbors[vi] != open {
                    return Err(format!("open neighbour count of {v} out of sync"));
                }
                let w = if s == Status::Infected { open as u64 } else { 0 };
                if st.infection_weights.weight(vi) != w {
                    return Err(format!("infection weight of {v} out of sync"));
                }
            }
        }
        if proposals != self.infection_proposals() {
            return Err(format!(
                "infection proposals {} but recount gives {proposals}",
                self.infection_proposals()
            ));
        }
        Ok(())
    }
}

/// One run of the chain; see [`RumorSim::run`].
pub fn run(
    config: &RumorConfig,
    policy: &CensorPolicy,
    seed: SeedSpec,
    forced_root_recovery: Option<f64>,
) -> Result<RumorOutcome> {
    RumorSim::new(config.clone())?.run(policy, seed, forced_root_recovery, false)
}

/// Recovered counts of a batch of independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredDistribution {
    /// `n_recovered` per replica, in replica order.
    pub values: Vec<u64>,
    pub absorption_times: Vec<f64>,
    pub censored: Vec<bool>,
    pub censored_count: u64,
}

impl RecoveredDistribution {
    pub fn histogram(&self) -> BTreeMap<u64, u64> {
        let mut h = BTreeMap::new();
        for v in &self.values {
            *h.entry(*v).or_insert(0) += 1;
        }
        h
    }

    /// Empirical `P(n_recovered >= threshold)`.
    pub fn tail_fraction(&self, threshold: f64) -> f64 {
        let hits = self.values.iter().filter(|v| **v as f64 >= threshold).count();
        hits as f64 / self.values.len().max(1) as f64
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|v| *v as f64).collect()
    }
}

/// Runs replicas `0..replicas` of `master_seed`.
pub fn sample_n_n_distribution(
    config: &RumorConfig,
    replicas: u64,
    policy: &CensorPolicy,
    master_seed: u64,
    forced_root_recovery: Option<f64>,
) -> Result<RecoveredDistribution> {
    let sim = RumorSim::new(config.clone())?;
    policy.validate()?;
    let outcomes = try_run_replicas(master_seed, replicas, |seed| {
        sim.run(policy, seed, forced_root_recovery, false)
    })?;
    let censored: Vec<bool> = outcomes.iter().map(|o| o.censored).collect();
    Ok(RecoveredDistribution {
        values: outcomes.iter().map(|o| o.n_recovered).collect(),
        absorption_times: outcomes.iter().map(|o| o.absorption_time).collect(),
        censored_count: censored.iter().filter(|c| **c).count() as u64,
        censored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> CensorPolicy {
        CensorPolicy::new(10_000_000, 1e6).unwrap()
    }

    #[test]
    fn default_initial_state() {
        let st = init_state(&RumorConfig::complete(5, 0.3)).unwrap();
        assert_eq!(st.infected_count(), 1);
        assert_eq!(st.status(0), Status::Recovered);
        assert_eq!(st.status(1), Status::Infected);
        assert_eq!(st.blamers(1), &Blamers::Listed(vec![0]));
        assert_eq!(st.recovery_rate(1), 1);
        for v in 2..=5 {
            assert_eq!(st.status(v), Status::Susceptible);
            assert_eq!(st.blamers(v), &Blamers::Listed(vec![]));
        }
        let st = init_state(&RumorConfig::complete(1, 0.3)).unwrap();
        assert_eq!(st.vertex_count(), 2);
        assert_eq!(st.status(1), Status::Infected);
    }

    #[test]
    fn full_blame_initial_state() {
        let cfg = RumorConfig::complete(3, 0.3).with_init(InitMode::FullBlame);
        let st = init_state(&cfg).unwrap();
        assert_eq!(st.blamers(1), &Blamers::All);
        let mut nbrs = Vec::new();
        for_each_neighbor(&cfg.topology, 3, 1, |u| nbrs.push(u));
        nbrs.sort();
        assert_eq!(nbrs, vec![0, 2, 3]);
        assert_eq!(st.recovery_rate(1), 1);
    }

    #[test]
    fn single_vertex_recovers_alone() {
        let cfg = RumorConfig::complete(1, 2.0);
        for i in 0..100 {
            let o = run(&cfg, &policy(), SeedSpec::new(1, i), None).unwrap();
            assert_eq!(o.n_recovered, 1);
            assert_eq!(o.events, 1);
            assert!(!o.censored);
        }
    }

    #[test]
    fn forced_recovery_happens_at_t() {
        let cfg = RumorConfig::complete(1, 2.0);
        let sim = RumorSim::new(cfg).unwrap();
        let o = sim.run(&policy(), SeedSpec::new(0, 0), Some(1.5), true).unwrap();
        assert_eq!(o.absorption_time, 1.5);
        assert_eq!(
            o.trajectory.unwrap(),
            vec![RumorEvent {
                time: 1.5,
                kind: RumorEventKind::ForcedRecovery { vertex: 1 }
            }]
        );
    }

    fn audit_run(cfg: RumorConfig, seeds: u64, forced: Option<f64>) {
        let sim = RumorSim::new(cfg).unwrap();
        for i in 0..seeds {
            let mut rng = SeedSpec::new(21, i).rng();
            let mut p = sim.process(forced).unwrap();
            p.audit().unwrap();
            let mut prev: Vec<Status> = (0..p.state().vertex_count() as u32)
                .map(|v| p.state().status(v))
                .collect();
            let mut ever_infected = vec![false; prev.len()];
            ever_infected[1] = true;
            while !p.state().is_absorbing() {
                let ev = p.step(&mut rng, f64::INFINITY).unwrap();
                if let RumorEventKind::Infection { from, to } = ev.kind {
                    assert_eq!(p.state().status(from), Status::Infected);
                    ever_infected[to as usize] = true;
                }
                p.audit().unwrap_or_else(|e| panic!("seed {i}: {e}"));
                for (v, old) in prev.iter_mut().enumerate() {
                    let new = p.state().status(v as u32);
                    let ok = matches!(
                        (*old, new),
                        (a, b) if a == b
                    ) || matches!(
                        (*old, new),
                        (Status::Susceptible, Status::Infected) | (Status::Infected, Status::Recovered)
                    );
                    assert!(ok, "illegal transition {old:?} -> {new:?} at {v}");
                    *old = new;
                }
                assert_eq!(p.state().status(0), Status::Recovered);
            }
            let infected_total = ever_infected[1..].iter().filter(|x| **x).count() as u64;
            assert_eq!(p.state().recovered_count(), infected_total);
        }
    }

    #[test]
    fn bookkeeping_audit_complete() {
        audit_run(RumorConfig::complete(6, 3.0), 200, None);
        audit_run(RumorConfig::complete(6, 3.0), 100, Some(0.7));
        audit_run(
            RumorConfig::complete(5, 4.0).with_init(InitMode::FullBlame),
            200,
            None,
        );
    }

    #[test]
    fn bookkeeping_audit_explicit() {
        // a 6-cycle with a chord, vertex 0 hanging off 1
        let g = Graph::parse_edge_list("0 1\n1 2\n2 3\n3 4\n4 5\n5 6\n6 1\n2 5\n").unwrap();
        audit_run(RumorConfig::explicit(g.clone(), 1.5), 200, None);
        audit_run(
            RumorConfig::explicit(g, 1.5).with_init(InitMode::FullBlame),
            200,
            None,
        );
    }

    #[test]
    fn explicit_complete_graph_matches_pendant_topology() {
        // building G_4 explicitly with scale n must give the same law; check
        // the recovered-count means agree statistically
        let n = 4;
        let mut edges = vec![(0u32, 1u32)];
        for i in 1..=n {
            for j in i + 1..=n {
                edges.push((i, j));
            }
        }
        let g = Graph::from_edges(n as usize + 1, &edges).unwrap();
        let a = RumorConfig::complete(n as usize, 1.0);
        let b = RumorConfig::explicit(g, 1.0).with_infection_scale(n as f64);
        let da = sample_n_n_distribution(&a, 40_000, &policy(), 1, None).unwrap();
        let db = sample_n_n_distribution(&b, 40_000, &policy(), 2, None).unwrap();
        let sa = crate::stats::summarize(&da.as_f64(), 0).unwrap();
        let sb = crate::stats::summarize(&db.as_f64(), 0).unwrap();
        let se = (sa.stderr.powi(2) + sb.stderr.powi(2)).sqrt();
        assert!((sa.mean - sb.mean).abs() < 4.0 * se, "{sa:?} {sb:?}");
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("# header\n0 1\n\n1 2 # trailing\n2 0\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert!(g.is_connected());
        assert!(Graph::parse_edge_list("0 1\n1\n").is_err());
        assert!(Graph::parse_edge_list("0 x\n").is_err());
        assert!(Graph::parse_edge_list("0 0\n").is_err());
        assert!(Graph::parse_edge_list("# nothing\n").is_err());
        let disconnected = Graph::parse_edge_list("0 1\n2 3\n").unwrap();
        assert!(!disconnected.is_connected());
        let cfg = RumorConfig::explicit(disconnected, 1.0);
        assert!(matches!(
            run(&cfg, &policy(), SeedSpec::new(0, 0), None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn caps_censor() {
        let cfg = RumorConfig::complete(50, 3.0);
        let tight = CensorPolicy::new(3, 1e6).unwrap();
        let mut any = false;
        for i in 0..50 {
            let o = run(&cfg, &tight, SeedSpec::new(2, i), None).unwrap();
            assert!(o.events <= 3);
            any |= o.censored;
        }
        assert!(any);
        let short = CensorPolicy::new(1_000_000, 1e-6).unwrap();
        let o = run(&cfg, &short, SeedSpec::new(2, 0), None).unwrap();
        assert!(o.censored);
        assert_eq!(o.n_recovered, 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = RumorConfig::complete(200, 0.5);
        let sim = RumorSim::new(cfg).unwrap();
        for i in 0..50 {
            let a = sim.run(&policy(), SeedSpec::new(8, i), None, true).unwrap();
            let b = sim.run(&policy(), SeedSpec::new(8, i), None, true).unwrap();
            assert_eq!(a, b);
        }
    }
}
