//! Converter for the LINQS citation-network release of Cora/Citeseer
//! (`<name>.content` + `<name>.cites`, optionally gzipped).
//!
//! * `.content`: one node per line, `<paper_id> <0/1 word attributes...> <class>`,
//!   whitespace separated. Node index = line order. Class ids are assigned
//!   by sorting class names.
//! * `.cites`: `<cited id> <citing id>` per line. Direction is dropped,
//!   duplicates and self-citations are removed, and citations naming an
//!   unknown paper are an error unless `skip_unknown` is set (Citeseer has
//!   a handful).
//! * Splits follow the Planetoid protocol sizes: `train_per_class` labeled
//!   nodes per class, then `num_val` and `num_test` nodes from a seeded
//!   shuffle of the remainder.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;

use super::{Dataset, Splits};
use crate::error::{GltError, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone)]
pub struct LinqsOptions {
    pub name: String,
    pub split_seed: u64,
    pub train_per_class: usize,
    pub num_val: usize,
    pub num_test: usize,
    /// Scale each feature row to sum to one.
    pub row_normalize: bool,
    pub skip_unknown: bool,
}

impl Default for LinqsOptions {
    fn default() -> Self {
        LinqsOptions {
            name: "cora".into(),
            split_seed: 0,
            train_per_class: 20,
            num_val: 500,
            num_test: 1000,
            row_normalize: true,
            skip_unknown: false,
        }
    }
}

fn open_lines(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| GltError::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

pub fn convert_linqs(content: &Path, cites: &Path, opts: &LinqsOptions) -> Result<Dataset> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f32>> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut num_features = None;

    for (lineno, line) in open_lines(content)?.lines().enumerate() {
        let line = line.map_err(|e| GltError::io(content, e))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(GltError::Bundle(format!(
                "{}:{}: too few columns",
                content.display(),
                lineno + 1
            )));
        }
        let f = toks.len() - 2;
        if *num_features.get_or_insert(f) != f {
            return Err(GltError::Bundle(format!(
                "{}:{}: {f} attributes, expected {}",
                content.display(),
                lineno + 1,
                num_features.unwrap()
            )));
        }
        let row = toks[1..=f]
            .iter()
            .map(|t| t.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| {
                GltError::Bundle(format!(
                    "{}:{}: non-numeric attribute",
                    content.display(),
                    lineno + 1
                ))
            })?;
        if ids.insert(toks[0].to_string(), rows.len()).is_some() {
            return Err(GltError::Bundle(format!(
                "{}: duplicate paper id {}",
                content.display(),
                toks[0]
            )));
        }
        rows.push(row);
        class_names.push(toks[toks.len() - 1].to_string());
    }
    let n = rows.len();
    let num_features = num_features.unwrap_or(0);

    let classes: Vec<&String> = class_names.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let labels: Vec<usize> = class_names
        .iter()
        .map(|c| classes.binary_search(&c).expect("class present"))
        .collect();
    let num_classes = classes.len();

    let mut edges = BTreeSet::new();
    for (lineno, line) in open_lines(cites)?.lines().enumerate() {
        let line = line.map_err(|e| GltError::io(cites, e))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 {
            return Err(GltError::Bundle(format!(
                "{}:{}: expected two ids",
                cites.display(),
                lineno + 1
            )));
        }
        match (ids.get(toks[0]), ids.get(toks[1])) {
            (Some(&a), Some(&b)) => {
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            _ if opts.skip_unknown => {}
            _ => {
                return Err(GltError::Bundle(format!(
                    "{}:{}: unknown paper id",
                    cites.display(),
                    lineno + 1
                )))
            }
        }
    }

    let mut features = Vec::with_capacity(n * num_features);
    for row in rows {
        let sum: f32 = row.iter().sum();
        let scale = if opts.row_normalize && sum != 0.0 {
            1.0 / sum
        } else {
            1.0
        };
        features.extend(row.into_iter().map(|v| v * scale));
    }

    let mut rng = stream(opts.split_seed, Stream::Split);
    let mut train = Vec::new();
    for c in 0..num_classes {
        let mut members: Vec<usize> = (0..n).filter(|&v| labels[v] == c).collect();
        members.shuffle(&mut rng);
        train.extend(members.into_iter().take(opts.train_per_class));
    }
    let mut is_train = vec![false; n];
    for &v in &train {
        is_train[v] = true;
    }
    let mut rest: Vec<usize> = (0..n).filter(|&v| !is_train[v]).collect();
    rest.shuffle(&mut rng);
    if opts.num_val + opts.num_test > rest.len() {
        return Err(GltError::InvalidArgument(format!(
            "{} val + {} test nodes requested, {} available",
            opts.num_val,
            opts.num_test,
            rest.len()
        )));
    }
    let mut val = rest[..opts.num_val].to_vec();
    let mut test = rest[opts.num_val..opts.num_val + opts.num_test].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();

    Dataset::new(
        opts.name.clone(),
        n,
        num_features,
        num_classes,
        edges,
        features,
        labels,
        Splits { train, val, test },
    )
}
