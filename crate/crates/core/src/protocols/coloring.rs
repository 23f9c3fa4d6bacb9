//! Two-prover 3-coloring: P1 claims colorability and sends a coloring, P2
//! agrees or names a monochromatic edge.

use std::path::Path;

use crate::error::{Error, Result};
use crate::game::{GameBuilder, History, StrategyProfile};
use crate::protocols::ProtocolGame;
use crate::rational::{rat, Rational};

pub const DEFAULT_VERTEX_CAP: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Graph> {
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &edges {
            if u >= vertices || v >= vertices {
                return Err(Error::Instance(format!("edge {u}-{v} names a vertex outside 0..{vertices}")));
            }
            if u == v {
                return Err(Error::Instance(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Instance(format!("duplicate edge {u}-{v}")));
            }
        }
        let g = Graph { vertices, edges };
        if !g.connected() {
            return Err(Error::Instance("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Graph { vertices: n, edges }
    }

    fn connected(&self) -> bool {
        if self.vertices == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(a, b) in &self.edges {
                for (x, y) in [(a, b), (b, a)] {
                    if x == u && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Edge list, one `u v` pair per line; `#` starts a comment. Vertices
    /// are 0-based and the count is one more than the largest index.
    pub fn parse(text: &str, path: &str) -> Result<Graph> {
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { path: path.to_string(), line: i + 1, message };
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| bad(format!("expected a vertex index, found {t:?}"))))
                .collect::<Result<_>>()?;
            if nums.len() != 2 {
                return Err(bad(format!("expected two vertices, found {}", nums.len())));
            }
            edges.push((nums[0], nums[1]));
        }
        let vertices = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Graph::new(vertices, edges)
    }

    pub fn load(path: &Path) -> Result<Graph> {
        let text = std::fs::read_to_string(path)?;
        Graph::parse(&text, &path.display().to_string())
    }

    /// All colorings as digit strings over {0,1,2}, in lexicographic order.
    pub fn colorings(&self) -> Vec<String> {
        let total = 3usize.pow(self.vertices as u32);
        (0..total)
            .map(|mut i| {
                let mut digits = vec![b'0'; self.vertices];
                for d in digits.iter_mut().rev() {
                    *d = b'0' + (i % 3) as u8;
                    i /= 3;
                }
                String::from_utf8(digits).unwrap()
            })
            .collect()
    }

    pub fn monochromatic(&self, coloring: &str) -> Vec<(usize, usize)> {
        let c = coloring.as_bytes();
        self.edges.iter().copied().filter(|&(u, v)| c[u] == c[v]).collect()
    }

    pub fn is_three_colorable(&self) -> bool {
        self.colorings().iter().any(|c| self.monochromatic(c).is_empty())
    }
}

pub fn edge_label(u: usize, v: usize) -> String {
    format!("edge-{u}-{v}")
}

/// Payments are in dollars of the original description, scaled by 1/4.
pub fn coloring_scale() -> Rational {
    rat(1, 4)
}

fn dollars(p1: i64, p2: i64) -> Vec<Rational> {
    vec![rat(p1, 4), rat(p2, 4)]
}

pub fn build_three_coloring(graph: &Graph, vertex_cap: usize) -> Result<ProtocolGame> {
    if graph.vertices > vertex_cap {
        return Err(Error::Instance(format!("graph has {} vertices, above the cap of {vertex_cap}", graph.vertices)));
    }
    let s = |xs: &[&str]| -> History { xs.iter().map(|x| x.to_string()).collect() };
    let mut b = GameBuilder::new(2);
    b.prover(&[], 1, vec!["no".into(), "yes".into()], None);
    b.terminal(&s(&["no"]), dollars(1, 1), 0);
    let colorings = graph.colorings();
    b.prover(&s(&["yes"]), 1, colorings.clone(), None);
    let mut replies = vec!["agree".to_string()];
    replies.extend(graph.edges.iter().map(|&(u, v)| edge_label(u, v)));
    for c in &colorings {
        let at = s(&["yes", c]);
        b.prover(&at, 2, replies.clone(), None);
        let mut leaf = at.clone();
        leaf.push("agree".into());
        b.terminal(&leaf, dollars(2, 1), 1);
        let code = c.as_bytes();
        for &(u, v) in &graph.edges {
            let mut leaf = at.clone();
            leaf.push(edge_label(u, v));
            let pay = if code[u] == code[v] { dollars(0, 2) } else { dollars(2, 0) };
            b.terminal(&leaf, pay, 1);
        }
    }
    let game = b.build();

    let colorable = graph.is_three_colorable();
    let mut honest = StrategyProfile::first(&game);
    honest.set_at(&game, &[], if colorable { "yes" } else { "no" })?;
    let first_proper = colorings.iter().find(|c| graph.monochromatic(c).is_empty()).unwrap_or(&colorings[0]);
    honest.set_at(&game, &s(&["yes"]), first_proper)?;
    for c in &colorings {
        let reply = match graph.monochromatic(c).first() {
            Some(&(u, v)) => edge_label(u, v),
            None => "agree".into(),
        };
        honest.set_at(&game, &s(&["yes", c]), &reply)?;
    }
    Ok(ProtocolGame { game, honest, correct_bit: u8::from(colorable), scale: coloring_scale() })
}
