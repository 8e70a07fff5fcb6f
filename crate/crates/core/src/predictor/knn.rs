use super::FeatureVector;
use crate::channel::{LinkRecord, LinkType};
use crate::error::{Error, Result};

/// K-nearest-neighbour regressor on standardized explicit features.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub link_type: LinkType,
    mean: Vec<f64>,
    std: Vec<f64>,
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub fn fit(features: &[FeatureVector], targets: &[f64]) -> Result<Self> {
        let first = features.first().ok_or_else(|| Error::invalid("KNN needs a non-empty database"))?;
        if features.len() != targets.len() {
            return Err(Error::invalid("features and targets differ in length"));
        }
        let dim = first.x.len();
        if features.iter().any(|f| f.x.len() != dim || f.link_type != first.link_type) {
            return Err(Error::invalid("mixed feature arity or link type"));
        }
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, v) in mean.iter_mut().zip(&f.x) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in std.iter_mut().zip(&f.x).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut std {
            *s = if s.sqrt() < 1e-9 { 1.0 } else { s.sqrt() };
        }
        let points = features
            .iter()
            .map(|f| f.x.iter().zip(mean.iter().zip(&std)).map(|(v, (m, s))| (v - m) / s).collect())
            .collect();
        Ok(KnnModel {
            link_type: first.link_type,
            mean,
            std,
            points,
            targets: targets.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean target of the `k` nearest points; ties broken by database order.
    pub fn predict(&self, f: &FeatureVector, k: usize) -> Result<f64> {
        if f.link_type != self.link_type || f.x.len() != self.mean.len() {
            return Err(Error::invalid("query does not match the KNN feature layout"));
        }
        if k == 0 || k > self.len() {
            return Err(Error::invalid(format!("k={k} outside 1..={}", self.len())));
        }
        let q: Vec<f64> = f
            .x
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        Ok(dist[..k].iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / k as f64)
    }
}

/// One-shot KNN over the records of the query's link type.
pub fn knn_predict(db: &[LinkRecord], f: &FeatureVector, k: usize) -> Result<f64> {
    let rows: Vec<&LinkRecord> = db.iter().filter(|r| r.link_type == f.link_type).collect();
    if rows.is_empty() {
        return Err(Error::invalid("KNN needs a non-empty database"));
    }
    let feats: Vec<FeatureVector> = rows.iter().map(|r| FeatureVector::from_record(r)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.rss).collect();
    KnnModel::fit(&feats, &ys)?.predict(f, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkEnd;
    use crate::geometry::Vec2;
    use crate::scenario::DensityLevel;

    fn rec(x: f64, y: f64, rss: f64) -> LinkRecord {
        let end = LinkEnd {
            id: 1,
            position: Vec2::new(x, y),
            height: 1.6,
            speed: 10.0,
        };
        LinkRecord {
            link_type: LinkType::V2I,
            tx: end,
            rx: LinkEnd { id: 0, position: Vec2::ZERO, height: 5.0, speed: 0.0 },
            rss,
            density: DensityLevel::Low,
        }
    }

    fn db() -> Vec<LinkRecord> {
        vec![
            rec(0.0, 0.0, -50.0),
            rec(10.0, 0.0, -60.0),
            rec(20.0, 0.0, -70.0),
            rec(0.0, 30.0, -80.0),
            rec(40.0, 40.0, -90.0),
        ]
    }

    #[test]
    fn k1_on_a_db_point() {
        let f = FeatureVector::from_record(&db()[2]);
        assert_eq!(knn_predict(&db(), &f, 1).unwrap(), -70.0);
    }

    #[test]
    fn k_all_is_global_mean() {
        let f = FeatureVector::from_record(&rec(3.0, 3.0, 0.0));
        assert_eq!(knn_predict(&db(), &f, 5).unwrap(), -70.0);
    }

    #[test]
    fn k3_hand_oracle() {
        // Standardize by hand: only x and y vary.
        let pts = [(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (0.0, 30.0), (40.0, 40.0)];
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / 5.0;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / 5.0;
        let sx = (pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / 5.0).sqrt();
        let sy = (pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / 5.0).sqrt();
        let q = (12.0, 5.0);
        let mut d: Vec<(f64, f64)> = pts
            .iter()
            .zip([-50.0, -60.0, -70.0, -80.0, -90.0])
            .map(|(p, y)| ((((p.0 - q.0) / sx).powi(2) + ((p.1 - q.1) / sy).powi(2)), y))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let expect = d[..3].iter().map(|x| x.1).sum::<f64>() / 3.0;
        let f = FeatureVector::from_record(&rec(q.0, q.1, 0.0));
        assert!((knn_predict(&db(), &f, 3).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let f = FeatureVector::from_record(&rec(0.0, 0.0, 0.0));
        assert!(knn_predict(&[], &f, 1).is_err());
        assert!(knn_predict(&db(), &f, 6).is_err());
    }
}
