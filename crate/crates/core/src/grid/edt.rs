//! Exact squared Euclidean distance transform (separable lower-envelope
//! algorithm, one pass along columns then one along rows).

/// Squared distance in cell units from each cell of a `res x res` raster to
/// the nearest cell with `feature[k] == true`. Rasters without features get
/// `f64::INFINITY`.
pub fn squared_edt(feature: &[bool], res: usize) -> Vec<f64> {
    squared_edt_nearest(feature, res).0
}

/// As [`squared_edt`], also returning the raster index of a nearest feature
/// (`u32::MAX` when there is none).
pub fn squared_edt_nearest(feature: &[bool], res: usize) -> (Vec<f64>, Vec<u32>) {
    let mut grid: Vec<f64> = feature.iter().map(|&f| if f { 0.0 } else { f64::INFINITY }).collect();
    // row of the nearest feature within each column after the first pass
    let mut src_row = vec![u32::MAX; res * res];
    let mut nearest = vec![u32::MAX; res * res];
    let mut f = vec![0.0; res];
    let mut d = vec![0.0; res];
    let mut arg = vec![0usize; res];
    let mut v = vec![0usize; res];
    let mut z = vec![0.0; res + 1];
    for i in 0..res {
        for j in 0..res {
            f[j] = grid[j * res + i];
        }
        envelope(&f, &mut d, &mut arg, &mut v, &mut z);
        for j in 0..res {
            grid[j * res + i] = d[j];
            if d[j].is_finite() {
                src_row[j * res + i] = arg[j] as u32;
            }
        }
    }
    for j in 0..res {
        let row = &mut grid[j * res..(j + 1) * res];
        f.copy_from_slice(row);
        envelope(&f, &mut d, &mut arg, &mut v, &mut z);
        row.copy_from_slice(&d);
        for i in 0..res {
            if d[i].is_finite() {
                let col = arg[i];
                nearest[j * res + i] = src_row[j * res + col] * res as u32 + col as u32;
            }
        }
    }
    (grid, nearest)
}

/// One-dimensional transform `d[q] = min_p (q - p)^2 + f[p]`.
fn envelope(f: &[f64], d: &mut [f64], arg: &mut [usize], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(p) => p,
        None => {
            d.iter_mut().for_each(|x| *x = f64::INFINITY);
            return;
        }
    };
    let mut k = 0usize;
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let qf = q as f64;
        let cut = |k: usize| {
            let p = v[k] as f64;
            ((f[q] + qf * qf) - (f[v[k]] + p * p)) / (2.0 * (qf - p))
        };
        let mut s = cut(k);
        while s <= z[k] {
            k -= 1;
            s = cut(k);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for q in 0..n {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        d[q] = (qf - p) * (qf - p) + f[v[k]];
        arg[q] = v[k];
    }
}
