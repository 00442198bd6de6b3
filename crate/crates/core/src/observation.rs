//! What an investigator sees of a cascade: the infected set and a partial map
//! of infection times.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    infected: Vec<NodeId>,
    tau: BTreeMap<NodeId, f64>,
}

impl Observation {
    /// `tau` keys must be infected nodes and times must be finite.
    pub fn new(infected: impl IntoIterator<Item = NodeId>, tau: BTreeMap<NodeId, f64>) -> Result<Self> {
        let mut infected: Vec<NodeId> = infected.into_iter().collect();
        infected.sort_unstable();
        infected.dedup();
        for (&v, &t) in &tau {
            if infected.binary_search(&v).is_err() {
                return Err(Error::InvalidArgument(format!(
                    "timestamped node {v} is not in the infected set"
                )));
            }
            if !t.is_finite() {
                return Err(Error::InvalidArgument(format!("node {v} has non-finite time {t}")));
            }
        }
        Ok(Observation { infected, tau })
    }

    /// Sorted infected node ids.
    pub fn infected(&self) -> &[NodeId] {
        &self.infected
    }

    pub fn tau(&self) -> &BTreeMap<NodeId, f64> {
        &self.tau
    }

    pub fn time(&self, v: NodeId) -> Option<f64> {
        self.tau.get(&v).copied()
    }

    pub fn is_infected(&self, v: NodeId) -> bool {
        self.infected.binary_search(&v).is_ok()
    }

    pub fn observed_count(&self) -> usize {
        self.tau.len()
    }

    pub fn earliest_time(&self) -> Option<f64> {
        self.tau.values().copied().min_by(f64::total_cmp)
    }

    /// Nodes that can still be the source: every unobserved infected node plus
    /// the observed node(s) carrying the earliest timestamp.
    pub fn candidates(&self) -> Vec<NodeId> {
        let earliest = self.earliest_time();
        self.infected
            .iter()
            .copied()
            .filter(|v| match self.tau.get(v) {
                None => true,
                Some(&t) => Some(t) == earliest,
            })
            .collect()
    }

    pub fn check_against(&self, g: &Graph) -> Result<()> {
        match self.infected.last() {
            Some(&v) if v >= g.node_count() => Err(Error::UnknownNode(v)),
            _ => Ok(()),
        }
    }
}

/// Reads the `node [time]` format, one infected node per line, resolving labels
/// against `g`. Blank lines and `#` comments are skipped.
pub fn read_observation<R: BufRead>(reader: R, g: &Graph) -> Result<Observation> {
    let index = g.label_index();
    let mut infected = Vec::new();
    let mut tau = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() > 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 'node [time]', found {} fields", fields.len()),
            });
        }
        let v = *index
            .get(fields[0])
            .ok_or_else(|| Error::UnknownLabel(fields[0].to_string()))?;
        infected.push(v);
        if let Some(raw) = fields.get(1) {
            let t: f64 = raw.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad time '{raw}'"),
            })?;
            tau.insert(v, t);
        }
    }
    Observation::new(infected, tau)
}

pub fn write_observation<W: Write>(obs: &Observation, g: &Graph, mut out: W) -> std::io::Result<()> {
    for &v in obs.infected() {
        match obs.time(v) {
            Some(t) => writeln!(out, "{} {}", g.label(v), t)?,
            None => writeln!(out, "{}", g.label(v))?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(infected: &[NodeId], tau: &[(NodeId, f64)]) -> Observation {
        Observation::new(infected.iter().copied(), tau.iter().copied().collect()).unwrap()
    }

    #[test]
    fn candidates_keep_earliest_and_unobserved() {
        // a=0, b=1, c=2, d=3
        let o = obs(&[0, 1, 2, 3], &[(0, 5.0), (1, 7.0)]);
        assert_eq!(o.candidates(), vec![0, 2, 3]);
        let o = obs(&[0, 1, 2], &[]);
        assert_eq!(o.candidates(), vec![0, 1, 2]);
        let o = obs(&[0, 1, 2], &[(0, 3.0), (1, 1.0), (2, 2.0)]);
        assert_eq!(o.candidates(), vec![1]);
    }

    #[test]
    fn tied_earliest_are_all_candidates() {
        let o = obs(&[0, 1, 2], &[(0, 1.0), (2, 1.0), (1, 4.0)]);
        assert_eq!(o.candidates(), vec![0, 2]);
    }

    #[test]
    fn rejects_timestamp_outside_infected() {
        let tau = [(4, 1.0)].into_iter().collect();
        assert!(Observation::new([0, 1], tau).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let g = Graph::from_labeled_edges(
            vec!["x".into(), "y".into(), "z".into()],
            [(0, 1), (1, 2)],
            false,
        )
        .unwrap()
        .0;
        let o = obs(&[0, 1, 2], &[(0, 0.1), (2, 1e-9 + 3.0)]);
        let mut buf = Vec::new();
        write_observation(&o, &g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "x 0.1\ny\nz 3.000000001\n");
        assert_eq!(read_observation(buf.as_slice(), &g).unwrap(), o);
    }

    #[test]
    fn unknown_label_is_reported() {
        let g = Graph::from_edges(2, [(0, 1)], false).unwrap().0;
        assert!(matches!(
            read_observation("0 1.0\n7\n".as_bytes(), &g),
            Err(Error::UnknownLabel(l)) if l == "7"
        ));
    }
}
