use super::aggregate::AggregatedDataset;
use crate::error::{Error, Result};

/// Equal-frequency bin of every value; tied values share the bin of their
/// first sorted position.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; m];
    let mut first = 0;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && values[i] != values[order[pos - 1]] {
            first = pos;
        }
        out[i] = first * bins / m;
    }
    out
}

/// Plug-in mutual information in nats between two discrete codings.
pub fn plug_in_mi(a: &[usize], b: &[usize]) -> f64 {
    let m = a.len() as f64;
    let ka = a.iter().max().map_or(0, |v| v + 1);
    let kb = b.iter().max().map_or(0, |v| v + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        pa[x] += 1;
        pb[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let c = joint[x * kb + y];
            if c > 0 {
                let pxy = c as f64 / m;
                mi += pxy * (pxy * m * m / (pa[x] as f64 * pb[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Raw (unnormalized) MI of every feature with the label.
pub fn mutual_information_raw(data: &AggregatedDataset, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::Invalid(format!(
            "mutual information needs >= 2 bins, got {bins}"
        )));
    }
    if data.is_empty() {
        return Err(Error::Invalid(
            "mutual information of an empty dataset".into(),
        ));
    }
    Ok((0..data.dim())
        .map(|j| plug_in_mi(&equal_frequency_bins(&data.x.column(j), bins), &data.y))
        .collect())
}
