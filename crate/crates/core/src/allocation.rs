use serde::{Deserialize, Serialize};

/// Candidate solution: binary channel-assignment matrix plus harvesting ratios.
///
/// `g[k][n] == 1` means allocation column `n` is held by device `k`. Entries
/// are stored as integers so that non-binary input read from JSON can be
/// reported rather than silently coerced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub g: Vec<Vec<u8>>,
    pub mu: Vec<f64>,
}

impl Allocation {
    pub fn empty(devices: usize, channels: usize, mu: Vec<f64>) -> Self {
        assert_eq!(mu.len(), devices, "one harvesting ratio per device");
        Self { g: vec![vec![0; channels]; devices], mu }
    }

    /// Builds a complete allocation from the owner of every channel.
    pub fn from_owners(owners: &[usize], mu: Vec<f64>) -> Self {
        let mut a = Self::empty(mu.len(), owners.len(), mu);
        for (n, &k) in owners.iter().enumerate() {
            a.assign(n, k);
        }
        a
    }

    pub fn num_devices(&self) -> usize {
        self.g.len()
    }

    pub fn num_channels(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    /// Gives `channel` to `user`, taking it from any previous holder.
    pub fn assign(&mut self, channel: usize, user: usize) {
        for row in &mut self.g {
            row[channel] = 0;
        }
        self.g[user][channel] = 1;
    }

    pub fn holds(&self, user: usize, channel: usize) -> bool {
        self.g[user][channel] == 1
    }

    pub fn channels_of(&self, user: usize) -> impl Iterator<Item = usize> + '_ {
        self.g[user].iter().enumerate().filter(|(_, &v)| v == 1).map(|(n, _)| n)
    }

    pub fn column_sum(&self, channel: usize) -> u32 {
        self.g.iter().map(|row| u32::from(row[channel])).sum()
    }

    pub fn owner(&self, channel: usize) -> Option<usize> {
        self.g.iter().position(|row| row[channel] == 1)
    }

    /// True when every column holds exactly one 1 and all entries are binary.
    pub fn is_complete(&self) -> bool {
        self.g.iter().flatten().all(|&v| v <= 1) && (0..self.num_channels()).all(|n| self.column_sum(n) == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assign_moves_channel() {
        let mut a = Allocation::empty(2, 3, vec![0.5, 0.5]);
        assert!(!a.is_complete());
        a.assign(0, 0);
        a.assign(0, 1);
        assert_eq!(a.column_sum(0), 1);
        assert_eq!(a.owner(0), Some(1));
        a.assign(1, 0);
        a.assign(2, 0);
        assert!(a.is_complete());
        assert_eq!(a.channels_of(0).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn from_owners_round_trip() {
        let a = Allocation::from_owners(&[1, 0, 1], vec![0.3, 0.4]);
        assert_eq!((0..3).map(|n| a.owner(n).unwrap()).collect::<Vec<_>>(), vec![1, 0, 1]);
    }
}
