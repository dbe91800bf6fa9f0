//! Bucket register of available Fock states.

use crate::fock_prob::PhotonCount;

/// Largest photon number a bucket can hold.
pub const MAX_BUCKET: usize = 127;

/// Counts of stored states per photon number, plus one source size that is
/// available in unlimited supply.
///
/// Two bit masks mirror the counts (`nonempty`: at least one state,
/// `multi`: at least two) so strategies can locate sizes with bit tricks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Buckets {
    counts: Vec<u64>,
    source_size: PhotonCount,
    nonempty: u128,
    multi: u128,
}

impl Buckets {
    /// Empty register with capacity for sizes `0..=max_size`.
    pub fn new(source_size: PhotonCount, max_size: PhotonCount) -> Self {
        assert!(max_size <= MAX_BUCKET && source_size >= 1 && source_size <= max_size);
        Self {
            counts: vec![0; max_size + 1],
            source_size,
            nonempty: 0,
            multi: 0,
        }
    }

    pub fn source_size(&self) -> PhotonCount {
        self.source_size
    }

    pub fn max_size(&self) -> PhotonCount {
        self.counts.len() - 1
    }

    /// Stored count, `None` for the unlimited source bucket.
    pub fn count(&self, size: PhotonCount) -> Option<u64> {
        if size == self.source_size {
            None
        } else {
            Some(self.counts.get(size).copied().unwrap_or(0))
        }
    }

    /// At least `k` states of this size can be drawn at once.
    pub fn has(&self, size: PhotonCount, k: u64) -> bool {
        self.count(size).is_none_or(|c| c >= k)
    }

    fn source_bit(&self) -> u128 {
        1u128 << self.source_size
    }

    /// Sizes with at least one state, source included.
    pub fn available_mask(&self) -> u128 {
        self.nonempty | self.source_bit()
    }

    /// Sizes with at least two states, source included.
    pub fn paired_mask(&self) -> u128 {
        self.multi | self.source_bit()
    }

    /// Removes one state; a no-op for the source.
    pub fn take(&mut self, size: PhotonCount) {
        if size == self.source_size {
            return;
        }
        let c = &mut self.counts[size];
        assert!(*c > 0, "took from empty bucket {size}");
        *c -= 1;
        match *c {
            0 => self.nonempty &= !(1u128 << size),
            1 => self.multi &= !(1u128 << size),
            _ => {}
        }
    }

    /// Stores one state; vacuum is dropped and the source absorbs its own size.
    pub fn put(&mut self, size: PhotonCount) {
        if size == 0 || size == self.source_size {
            return;
        }
        let c = &mut self.counts[size];
        *c += 1;
        match *c {
            1 => self.nonempty |= 1u128 << size,
            2 => self.multi |= 1u128 << size,
            _ => {}
        }
    }

    /// Total photons held in finite buckets.
    pub fn stored_photons(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(size, c)| size as u64 * c)
            .sum()
    }

    /// Non-empty finite buckets as `(size, count)`.
    pub fn occupied(&self) -> impl Iterator<Item = (PhotonCount, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (s, c))
    }
}

/// Position of the highest set bit.
pub(crate) fn highest(mask: u128) -> Option<PhotonCount> {
    (mask != 0).then(|| 127 - mask.leading_zeros() as usize)
}

/// Position of the `index`-th set bit, counting from the lowest.
pub(crate) fn nth_set_bit(mut mask: u128, index: u32) -> PhotonCount {
    for _ in 0..index {
        mask &= mask - 1;
    }
    mask.trailing_zeros() as usize
}
