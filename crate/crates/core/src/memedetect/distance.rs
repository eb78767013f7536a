/// Squared Euclidean distance, accumulated in `f64` over four lanes.
#[inline]
pub fn sq_dist(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for l in 0..4 {
            let d = a[i * 4 + l] as f64 - b[i * 4 + l] as f64;
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm(a: &[f32]) -> f64 {
    a.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt()
}

/// A candidate neighbour returned by an index query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: u32,
    /// Euclidean (not squared) distance.
    pub distance: f64,
}

/// Bounded result set keeping the `k` closest points, ties broken by index.
pub(crate) struct ResultSet {
    k: usize,
    // sorted ascending by (sq distance, index)
    items: Vec<(f64, u32)>,
}

impl ResultSet {
    pub fn new(k: usize) -> Self {
        ResultSet {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.k
    }

    /// Squared distance of the current worst kept point, or infinity.
    pub fn worst(&self) -> f64 {
        if self.is_full() {
            self.items.last().map_or(f64::INFINITY, |x| x.0)
        } else {
            f64::INFINITY
        }
    }

    pub fn add(&mut self, sq: f64, index: u32) {
        if self.k == 0 {
            return;
        }
        let key = (sq, index);
        if self.is_full() {
            let last = *self.items.last().unwrap();
            if (key.0, key.1) >= (last.0, last.1) {
                return;
            }
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < sq || (d == sq && i < index));
        self.items.insert(pos, key);
        self.items.truncate(self.k);
    }

    pub fn into_neighbors(self) -> Vec<Neighbor> {
        self.items
            .into_iter()
            .map(|(sq, index)| Neighbor {
                index,
                distance: sq.sqrt(),
            })
            .collect()
    }
}
