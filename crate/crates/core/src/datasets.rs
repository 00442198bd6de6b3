//! Small built-in networks.

use crate::graph::{load_edge_list, Graph};

/// Padgett's Florentine families marriage network: 15 families, 20 ties.
pub const FLORENTINE_EDGES: &str = "\
Acciaiuoli Medici
Medici Barbadori
Medici Ridolfi
Medici Tornabuoni
Medici Albizzi
Medici Salviati
Castellani Peruzzi
Castellani Strozzi
Castellani Barbadori
Peruzzi Strozzi
Peruzzi Bischeri
Strozzi Ridolfi
Strozzi Bischeri
Ridolfi Tornabuoni
Tornabuoni Guadagni
Albizzi Ginori
Albizzi Guadagni
Salviati Pazzi
Bischeri Guadagni
Guadagni Lamberteschi
";

pub fn florentine() -> Graph {
    load_edge_list(FLORENTINE_EDGES.as_bytes(), false)
        .expect("built-in edge list parses")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn florentine_shape() {
        let g = florentine();
        assert_eq!(g.node_count(), 15);
        assert_eq!(g.edge_count(), 20);
        assert!(g.is_connected());
        assert_eq!(g.degree(g.node_by_label("Medici").unwrap()), 6);
    }
}
