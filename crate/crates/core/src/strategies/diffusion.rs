//! Basic diffusion: follow the precomputed neighbor table, skipping dead
//! entries, and fall back to transmitting straight to the base when the
//! table is exhausted.

use crate::topology::NeighborEntry;

use super::Destination;

/// Pick the first-ranked alive entry of `table`, or the base station when
/// the table is empty or fully dead. The table is ranked once at setup; the
/// liveness filter is the engine's failure detection folded into selection.
pub fn diffusion_select(table: &[NeighborEntry], alive: &[bool]) -> Destination {
    table
        .iter()
        .find(|e| alive[e.neighbor])
        .map(|e| Destination::Node(e.neighbor))
        .unwrap_or(Destination::Base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(neighbor: usize) -> NeighborEntry {
        NeighborEntry {
            neighbor,
            dist_to_me: 10.0,
            dist_to_base: 20.0,
        }
    }

    #[test]
    fn picks_first_alive_entry() {
        let table = vec![entry(2), entry(1)];
        let alive = vec![true, true, true];
        assert_eq!(diffusion_select(&table, &alive), Destination::Node(2));
    }

    #[test]
    fn skips_dead_entries() {
        let table = vec![entry(2), entry(1)];
        let alive = vec![true, true, false];
        assert_eq!(diffusion_select(&table, &alive), Destination::Node(1));
    }

    #[test]
    fn falls_back_to_base() {
        let table = vec![entry(2), entry(1)];
        let alive = vec![true, false, false];
        assert_eq!(diffusion_select(&table, &alive), Destination::Base);
        assert_eq!(diffusion_select(&[], &alive), Destination::Base);
    }
}
