//! Finite graphs carrying spins, with the graph metric.
//!
//! A [`SpinGraph`] holds the vertex set, weighted edges and per-vertex spin
//! magnitudes. Edge weights are read as couplings `J_xy` by the spin models
//! and as hopping rates `r_xy` by the exclusion process. All-pairs distances
//! are computed once by breadth-first search at construction.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;

use crate::error::{domain, Error, Result};

pub type Vertex = usize;

/// A spin magnitude stored as the integer `2s`, so half-integers stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwiceSpin(u32);

impl TwiceSpin {
    pub const HALF: TwiceSpin = TwiceSpin(1);
    pub const ONE: TwiceSpin = TwiceSpin(2);

    pub fn new(twice: u32) -> Result<Self> {
        if twice == 0 {
            return domain("spin magnitude must be positive");
        }
        Ok(TwiceSpin(twice))
    }

    /// From a real value such as `0.5` or `1.5`.
    pub fn from_f64(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !(twice.is_finite() && twice >= 1.0 && (twice - twice.round()).abs() < 1e-12) {
            return domain(format!("spin {s} is not a positive half-integer"));
        }
        Self::new(twice.round() as u32)
    }

    /// Parses `1/2`, `3/2`, `1`, `0.5`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num: u32 = num
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("bad spin '{text}'")))?;
            match den.trim() {
                "2" => Self::new(num),
                "1" => Self::new(2 * num),
                _ => domain(format!("spin '{text}' is not a half-integer")),
            }
        } else {
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Domain(format!("bad spin '{text}'")))?;
            Self::from_f64(v)
        }
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Local Hilbert space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }
}

impl fmt::Display for TwiceSpin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Graph distance; disconnected pairs are `Infinite`, never a large number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    fn plus(self, other: Distance) -> Distance {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => Distance::Finite(a + b),
            _ => Distance::Infinite,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub a: Vertex,
    pub b: Vertex,
    pub weight: f64,
}

/// Vertices `0..n`, weighted edges and spin magnitudes. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinGraph {
    n: usize,
    edges: Vec<Edge>,
    spins: Vec<TwiceSpin>,
    adjacency: Vec<Vec<Vertex>>,
    dist: Vec<Distance>,
}

impl SpinGraph {
    /// Builds a graph with all spins 1/2. Rejects self-loops, duplicate
    /// edges (in either orientation), out-of-range vertices and non-finite
    /// weights.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex, f64)>) -> Result<Self> {
        if n == 0 {
            return domain("a graph needs at least one vertex");
        }
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b, weight) in edges {
            if a >= n || b >= n {
                return domain(format!("edge ({a}, {b}) references a vertex outside 0..{n}"));
            }
            if a == b {
                return domain(format!("self-loop at vertex {a}"));
            }
            if !weight.is_finite() {
                return domain(format!("edge ({a}, {b}) has non-finite weight"));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return domain(format!("duplicate edge ({a}, {b})"));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
            list.push(Edge { a, b, weight });
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        let dist = all_pairs_bfs(n, &adjacency);
        Ok(SpinGraph {
            n,
            edges: list,
            spins: vec![TwiceSpin::HALF; n],
            adjacency,
            dist,
        })
    }

    pub fn path(n: usize, weight: f64) -> Result<Self> {
        Self::new(n, (0..n.saturating_sub(1)).map(|x| (x, x + 1, weight)))
    }

    /// Cycle `0-1-...-(n-1)-0`; needs `n >= 3`.
    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        if n < 3 {
            return domain("a ring needs at least 3 vertices");
        }
        Self::new(n, (0..n).map(|x| (x, (x + 1) % n, weight)))
    }

    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b, weight));
            }
        }
        Self::new(n, edges)
    }

    /// Vertex 0 joined to every other vertex.
    pub fn star(n: usize, weight: f64) -> Result<Self> {
        Self::new(n, (1..n).map(|x| (0, x, weight)))
    }

    pub fn with_uniform_spin(mut self, s: TwiceSpin) -> Self {
        self.spins = vec![s; self.n];
        self
    }

    pub fn with_spins(mut self, spins: Vec<TwiceSpin>) -> Result<Self> {
        if spins.len() != self.n {
            return domain(format!("{} spins given for {} vertices", spins.len(), self.n));
        }
        self.spins = spins;
        Ok(self)
    }

    /// Same graph with every edge weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self> {
        let g = Self::new(self.n, self.edges.iter().map(|e| (e.a, e.b, e.weight * factor)))?;
        g.with_spins(self.spins.clone())
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[Vertex]) -> Result<Self> {
        if perm.len() != self.n || perm.iter().collect::<BTreeSet<_>>().len() != self.n {
            return domain("relabeling must be a permutation of the vertices");
        }
        let g = Self::new(self.n, self.edges.iter().map(|e| (perm[e.a], perm[e.b], e.weight)))?;
        let mut spins = vec![TwiceSpin::HALF; self.n];
        for (v, &s) in self.spins.iter().enumerate() {
            spins[perm[v]] = s;
        }
        g.with_spins(spins)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn spins(&self) -> &[TwiceSpin] {
        &self.spins
    }

    pub fn spin(&self, x: Vertex) -> TwiceSpin {
        self.spins[x]
    }

    pub fn neighbors(&self, x: Vertex) -> &[Vertex] {
        &self.adjacency[x]
    }

    fn check(&self, x: Vertex) -> Result<()> {
        if x >= self.n {
            return domain(format!("vertex {x} not in graph of {} vertices", self.n));
        }
        Ok(())
    }

    /// Shortest-path edge count.
    pub fn distance(&self, x: Vertex, y: Vertex) -> Result<Distance> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist[x * self.n + y])
    }

    /// Largest pairwise distance inside `set`.
    pub fn diameter(&self, set: &[Vertex]) -> Result<Distance> {
        if set.is_empty() {
            return domain("diameter of an empty set");
        }
        let mut best = Distance::Finite(0);
        for &x in set {
            for &y in set {
                best = best.max(self.distance(x, y)?);
            }
        }
        Ok(best)
    }

    /// `min_{y in set} d(x, y)`.
    pub fn set_distance(&self, x: Vertex, set: &[Vertex]) -> Result<Distance> {
        if set.is_empty() {
            return domain("distance to an empty set");
        }
        let mut best = Distance::Infinite;
        for &y in set {
            best = best.min(self.distance(x, y)?);
        }
        Ok(best)
    }

    pub fn is_connected(&self) -> bool {
        self.dist[..self.n].iter().all(|d| d.is_finite())
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            domain("operation needs a connected graph (finite distances between all vertices)")
        }
    }

    /// Minimum distance between distinct vertices. Always 1 for a graph
    /// metric with at least one edge.
    pub fn min_spacing(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for x in 0..self.n {
            for y in 0..self.n {
                if x != y {
                    if let Distance::Finite(d) = self.dist[x * self.n + y] {
                        best = Some(best.map_or(d, |b| b.min(d)));
                    }
                }
            }
        }
        best
    }

    /// Two-colouring of a connected graph, `None` if an odd cycle exists.
    /// The part containing vertex 0 comes first.
    pub fn bipartition(&self) -> Option<(Vec<Vertex>, Vec<Vertex>)> {
        let mut colour = vec![None; self.n];
        for start in 0..self.n {
            if colour[start].is_some() {
                continue;
            }
            colour[start] = Some(false);
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                let c = colour[x].unwrap();
                for &y in &self.adjacency[x] {
                    match colour[y] {
                        None => {
                            colour[y] = Some(!c);
                            queue.push_back(y);
                        }
                        Some(cy) if cy == c => return None,
                        _ => {}
                    }
                }
            }
        }
        let a = (0..self.n).filter(|&x| colour[x] == Some(false)).collect();
        let b = (0..self.n).filter(|&x| colour[x] == Some(true)).collect();
        Some((a, b))
    }

    /// Reads the plain-text graph format:
    ///
    /// ```text
    /// vertices 4
    /// 0 1 1.0
    /// 1 2 1.0
    /// spin 2 1
    /// ```
    ///
    /// Blank lines and `#` comments are ignored; spins default to 1/2.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        let mut spins = Vec::new();
        let perr = |line: usize, message: String| Error::Parse { line, message };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "vertices" => {
                    if n.is_some() {
                        return Err(perr(line_no, "repeated 'vertices' header".into()));
                    }
                    if fields.len() != 2 {
                        return Err(perr(line_no, "expected 'vertices N'".into()));
                    }
                    n = Some(
                        fields[1]
                            .parse::<usize>()
                            .map_err(|_| perr(line_no, format!("bad vertex count '{}'", fields[1])))?,
                    );
                }
                "spin" => {
                    if n.is_none() {
                        return Err(perr(line_no, "'vertices N' must come first".into()));
                    }
                    if fields.len() != 3 {
                        return Err(perr(line_no, "expected 'spin x s'".into()));
                    }
                    let x = fields[1]
                        .parse::<usize>()
                        .map_err(|_| perr(line_no, format!("bad vertex '{}'", fields[1])))?;
                    let s = TwiceSpin::parse(fields[2]).map_err(|e| perr(line_no, e.to_string()))?;
                    spins.push((line_no, x, s));
                }
                _ => {
                    if n.is_none() {
                        return Err(perr(line_no, "'vertices N' must come first".into()));
                    }
                    if fields.len() != 3 {
                        return Err(perr(line_no, "expected 'x y weight'".into()));
                    }
                    let x = fields[0]
                        .parse::<usize>()
                        .map_err(|_| perr(line_no, format!("bad vertex '{}'", fields[0])))?;
                    let y = fields[1]
                        .parse::<usize>()
                        .map_err(|_| perr(line_no, format!("bad vertex '{}'", fields[1])))?;
                    let w = fields[2]
                        .parse::<f64>()
                        .map_err(|_| perr(line_no, format!("bad weight '{}'", fields[2])))?;
                    edges.push((line_no, x, y, w));
                }
            }
        }
        let n = n.ok_or_else(|| perr(0, "missing 'vertices N' header".into()))?;
        let mut seen = BTreeSet::new();
        for &(line_no, x, y, w) in &edges {
            if x >= n || y >= n {
                return Err(perr(line_no, format!("edge ({x}, {y}) outside 0..{n}")));
            }
            if x == y {
                return Err(perr(line_no, format!("self-loop at vertex {x}")));
            }
            if !w.is_finite() {
                return Err(perr(line_no, "non-finite weight".into()));
            }
            if !seen.insert((x.min(y), x.max(y))) {
                return Err(perr(line_no, format!("duplicate edge ({x}, {y})")));
            }
        }
        let g = Self::new(n, edges.iter().map(|&(_, x, y, w)| (x, y, w)))?;
        let mut spin_vec = vec![TwiceSpin::HALF; n];
        for (line_no, x, s) in spins {
            if x >= n {
                return Err(perr(line_no, format!("vertex {x} outside 0..{n}")));
            }
            spin_vec[x] = s;
        }
        g.with_spins(spin_vec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Inverse of [`SpinGraph::parse`]; non-default spins are written out.
    pub fn to_text(&self) -> String {
        let mut out = format!("vertices {}\n", self.n);
        for e in &self.edges {
            out.push_str(&format!("{} {} {:?}\n", e.a, e.b, e.weight));
        }
        for (x, s) in self.spins.iter().enumerate() {
            if *s != TwiceSpin::HALF {
                out.push_str(&format!("spin {x} {s}\n"));
            }
        }
        out
    }
}

fn all_pairs_bfs(n: usize, adjacency: &[Vec<Vertex>]) -> Vec<Distance> {
    let mut dist = vec![Distance::Infinite; n * n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        let row = &mut dist[src * n..(src + 1) * n];
        row[src] = Distance::Finite(0);
        queue.clear();
        queue.push_back(src);
        while let Some(x) = queue.pop_front() {
            let next = row[x].plus(Distance::Finite(1));
            for &y in &adjacency[x] {
                if row[y] == Distance::Infinite {
                    row[y] = next;
                    queue.push_back(y);
                }
            }
        }
    }
    dist
}
