//! Brute-force reference implementations shared by the integration suites.
//! Straight loops over `Vec<bool>`; nothing here touches the bit-packed paths.
#![allow(dead_code)]

pub fn bin_counts(bits: &[bool], w: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut k = 0;
    while (k + 1) * w <= bits.len() {
        let mut c = 0;
        for &b in &bits[k * w..(k + 1) * w] {
            if b {
                c += 1;
            }
        }
        out.push(c);
        k += 1;
    }
    out
}

pub fn herald(signal: &[bool], idler: &[bool], w: usize, forward: bool) -> Vec<bool> {
    let n = signal.len() as i64;
    let w = w as i64;
    (0..n)
        .map(|k| {
            if !signal[k as usize] {
                return false;
            }
            let hi = if forward { 0 } else { w };
            (-w..=hi).any(|d| {
                let j = k + d;
                j >= 0 && j < n && idler[j as usize]
            })
        })
        .collect()
}

pub fn dead_time(bits: &[bool], d: usize) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    let mut last: Option<usize> = None;
    for k in 0..bits.len() {
        if bits[k] {
            let ok = match last {
                None => true,
                Some(l) => k - l >= d,
            };
            if ok {
                out[k] = true;
                last = Some(k);
            }
        }
    }
    out
}

/// `(n, s, v)` in exact integers: mean = s / n, variance = v / n^2.
pub fn moments(counts: &[u32]) -> (u128, u128, u128) {
    let n = counts.len() as u128;
    let s: u128 = counts.iter().map(|&c| c as u128).sum();
    let s2: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    (n, s, n * s2 - s * s)
}

pub fn calibrate(bits: &[bool], target: f64) -> usize {
    let mut best = (f64::INFINITY, 0);
    for w in 1..=bits.len() {
        let c = bin_counts(bits, w);
        let mean = c.iter().map(|&x| x as u64).sum::<u64>() as f64 / c.len() as f64;
        let d = (mean - target).abs();
        if d < best.0 {
            best = (d, w);
        }
    }
    best.1
}

pub fn onsets(samples: &[f32], high: f64, low: f64) -> Vec<bool> {
    let mut armed = true;
    samples
        .iter()
        .map(|&v| {
            let v = v as f64;
            let mut fire = false;
            if armed && v >= high {
                fire = true;
                armed = false;
            } else if !armed && v < low {
                armed = true;
            }
            fire
        })
        .collect()
}

/// Tally of each count value: `out[n]` bins held `n` events.
pub fn histogram(counts: &[u32]) -> Vec<u64> {
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut out = vec![0u64; max + 1];
    for &c in counts {
        out[c as usize] += 1;
    }
    out
}
