//! Hadamard code over b-bit messages: codeword bit s is <s, m> mod 2.

/// Codeword of `msg` with length 2^b.
pub fn encode(msg: u128, b: u32) -> Vec<bool> {
    (0..1usize << b).map(|s| (s as u128 & msg).count_ones() % 2 == 1).collect()
}

/// Closest codeword among messages below `limit`: (message, distance).
/// Ties go to the smallest message.
pub fn decode(word: &[bool], limit: u128) -> (u128, usize) {
    let ell = word.len();
    assert!(ell.is_power_of_two(), "word length must be a power of two");
    // Walsh-Hadamard transform of (-1)^word gives ell - 2 dist(word, c_m).
    let mut f: Vec<i64> = word.iter().map(|&x| if x { -1 } else { 1 }).collect();
    let mut h = 1;
    while h < ell {
        for i in (0..ell).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
    let top = (limit.min(ell as u128)) as usize;
    let best = (0..top).max_by_key(|&m| (f[m], std::cmp::Reverse(m))).unwrap_or(0);
    (best as u128, ((ell as i64 - f[best]) / 2) as usize)
}

pub fn distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
