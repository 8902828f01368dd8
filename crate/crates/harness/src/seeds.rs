//! Child seeds from one root seed. Each `(stream, index)` pair gets its own SplitMix64
//! output, so the seed a cell sees does not depend on execution order.

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn child(root: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ splitmix64(stream)).wrapping_add(index))
}

pub const GP: u64 = 1;
pub const NL: u64 = 2;
pub const HARTREE: u64 = 3;
pub const STUDY: u64 = 4;
pub const SELFTEST: u64 = 5;
