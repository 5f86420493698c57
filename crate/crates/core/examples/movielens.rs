//! Train on a MovieLens ratings file and print metrics plus a few representatives.
//!
//! cargo run --release -p lfg-core --example movielens -- data/ml-100k/ratings.csv [data/ml-100k/catalog.jsonl]

use std::time::Instant;

use lfg_core::factorization::{evaluate, train_with_history, TrainingConfig};
use lfg_core::ingest::{load_catalog, load_ratings, split_dataset, RatingFormat};
use lfg_core::representatives::{select_representatives, SelectionConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let ratings = args.next().unwrap_or_else(|| "data/ml-100k/ratings.csv".into());
    let catalog = args.next().map(load_catalog).transpose()?.map(|c| c.value);

    let loaded = load_ratings(&ratings, RatingFormat::MovielensCsv)?;
    let ds = loaded.value;
    println!("{} ratings, {} users, {} items, {} skipped lines", ds.len(), ds.user_count(), ds.item_count(), loaded.warnings.len());

    let (train, test) = split_dataset(&ds, 0.2, 7)?;
    let cfg = TrainingConfig::default();
    let started = Instant::now();
    let (model, history) = train_with_history(&train, &cfg)?;
    println!("trained in {:.2?}", started.elapsed());
    for (epoch, obj) in history.iter().enumerate() {
        println!("  epoch {:2}  objective {:.1}", epoch + 1, obj);
    }
    let metrics = evaluate(&model, &test, 10)?;
    println!("test rmse {:.4}  ndcg@10 {:?}", metrics.rmse, metrics.ndcg_at_10);

    let reps = select_representatives(&model, &ds, &SelectionConfig::default())?;
    for f in &reps.factors {
        let titles: Vec<String> = f
            .entries
            .iter()
            .take(3)
            .map(|e| match &catalog {
                Some(c) => c.get(e.item_id).map_or(e.item_id.to_string(), |m| m.title.clone()),
                None => e.item_id.to_string(),
            })
            .collect();
        println!("factor {:2}: {}", f.factor + 1, titles.join(" | "));
    }
    Ok(())
}
