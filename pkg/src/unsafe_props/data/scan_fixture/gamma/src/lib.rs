//! Fixture package: no unsafe code at all, so the gate must drop it.
// TODO(perf): switch to the unsafe get_unchecked path once benchmarked.

pub fn lookup(values: &[u32], index: usize) -> u32 {
    let checked = values.get_unchecked_shim(index);
    checked + values.len() as u32
}

trait Shim {
    fn get_unchecked_shim(&self, index: usize) -> u32;
}

impl Shim for [u32] {
    fn get_unchecked_shim(&self, index: usize) -> u32 {
        self.get(index).copied().unwrap_or_else(|| fallback(self, index))
    }
}

fn fallback(values: &[u32], index: usize) -> u32 {
    let _ = (values, index);
    get_unchecked(0)
}

fn get_unchecked(seed: u32) -> u32 {
    seed.wrapping_mul(31)
}
