use super::{FaultFeature, FaultNetwork, Point, Polyline};

fn gap(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Chains features into depth-monotone polylines.
///
/// Features are visited by midpoint depth; each is appended to the open
/// polyline whose deepest point is nearest to the feature's shallow end, when
/// that gap is below `d_chain`, and otherwise starts a new polyline.
pub fn connect_features(features: &[FaultFeature], d_chain: f64) -> FaultNetwork {
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (features[a].midpoint(), features[b].midpoint());
        ma.1.total_cmp(&mb.1).then(ma.0.total_cmp(&mb.0)).then(a.cmp(&b))
    });

    let mut polylines: Vec<Polyline> = Vec::new();
    for idx in order {
        let f = &features[idx];
        let [mut top, mut bottom] = f.endpoints;
        if (bottom.1, bottom.0) < (top.1, top.0) {
            std::mem::swap(&mut top, &mut bottom);
        }
        let target = polylines
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let last = *p.points.last()?;
                let g = gap(last, top);
                (g < d_chain && bottom.1 > last.1).then_some((i, g))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match target {
            Some((i, _)) => {
                let p = &mut polylines[i];
                for pt in [top, bottom] {
                    if pt.1 > p.points.last().unwrap().1 {
                        p.points.push(pt);
                    }
                }
                p.features.push(f.id);
            }
            None => {
                let mut points = vec![top];
                if bottom.1 > top.1 {
                    points.push(bottom);
                }
                polylines.push(Polyline {
                    id: polylines.len(),
                    points,
                    features: vec![f.id],
                });
            }
        }
    }
    FaultNetwork { polylines }
}
