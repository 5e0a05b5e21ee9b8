// Scratch harness for sizing the desk-scale runs.
use dsr_core::dataset::TrainRecord;
use dsr_core::evaluation::McqItem;
use dsr_core::policy::Policy;
use dsr_core::rewards::detect_reasoning;
use dsr_core::synthdata::{generate_world, WorldSpec};
use dsr_core::training::*;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let rc_steps: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let rl_lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let rl_beta: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.001);
    let seed_off: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0);
    println!("rc_steps {rc_steps} rl_lr {rl_lr} rl_beta {rl_beta} seed_off {seed_off}");
    let t0 = Instant::now();
    let spec = WorldSpec { n_keys: 25, n_options: 5, chain_len: 23, seed: 7 + seed_off };
    let (world, train, eval) = generate_world(spec, 600, 50).unwrap();
    let records: Vec<TrainRecord> = train.iter().map(|i| i.to_train_record()).collect();
    let eval_items: Vec<McqItem> = eval.iter().map(|i| i.to_mcq_item()).collect();
    println!("world: vocab {} train {} eval {}", world.vocab.len(), train.len(), eval_items.len());

    let mut policy = Policy::init(world.vocab.clone(), 12, 42 + seed_off);

    // LA
    let la_data = build_sft_dataset(&records, &world.vocab, Stage::La, 32).unwrap();
    let la_cfg = TrainConfig {
        batch_size: 16,
        learning_rate: 0.02,
        max_steps: 200,
        seed: 1 + seed_off,
        optimizer: OptimizerKind::Adam,
        ..Default::default()
    };
    let la_stats = sft_stage(&mut policy, &la_data, &la_cfg, Stage::La).unwrap();
    println!(
        "LA: loss {:.4} -> {:.4} ({:?})",
        la_stats.losses[0],
        la_stats.losses.last().unwrap(),
        t0.elapsed()
    );

    // RC
    let rc_data = build_sft_dataset(&records, &world.vocab, Stage::Rc, 32).unwrap();
    let rc_cfg = TrainConfig {
        batch_size: 16,
        learning_rate: 0.02,
        max_steps: rc_steps,
        seed: 2 + seed_off,
        optimizer: OptimizerKind::Adam,
        ..Default::default()
    };
    let rc_stats = sft_stage(&mut policy, &rc_data, &rc_cfg, Stage::Rc).unwrap();
    println!(
        "RC: loss {:.4} -> {:.4} ({:?})",
        rc_stats.losses[0],
        rc_stats.losses.last().unwrap(),
        t0.elapsed()
    );

    // Format compliance + post-RC metrics
    let mut ok = 0;
    for (i, item) in eval_items.iter().enumerate() {
        let bag = world.vocab.prompt_bag(&item.question);
        let rec = policy.sample_one(&bag, 1000 + i as u64, 32).unwrap();
        if detect_reasoning(&rec.tokens) {
            ok += 1;
        }
    }
    let (acc0, hi0) = evaluate_policy(&policy, &eval_items, 99, 32).unwrap();
    println!(
        "post-RC: format {:.3} acc {acc0:.3} hi {hi0:.3} ({:?})",
        ok as f64 / eval_items.len() as f64,
        t0.elapsed()
    );

    // DSR
    let prompts: Vec<RlPrompt> =
        records.iter().map(|r| RlPrompt::from_record(r, &world.vocab).unwrap()).collect();
    let reference = policy.snapshot();
    let cfg = TrainConfig {
        batch_size: 8,
        group_size: 8,
        learning_rate: rl_lr,
        beta: rl_beta,
        seed: 3 + seed_off,
        max_steps: 2000,
        optimizer: OptimizerKind::Adam,
        eval_every: 100,
        ..Default::default()
    };
    let horizon: u64 = std::env::args()
        .nth(5)
        .and_then(|s| s.parse().ok())
        .unwrap_or(cfg.max_steps);
    println!("horizon {horizon}");
    let sched = DecaySchedule::cosine(horizon);
    let verifier = desk_verifier(5);

    let mut full_policy = policy.clone();
    let log = dsr_run(
        &mut full_policy,
        &reference,
        &prompts,
        &eval_items,
        &cfg,
        &sched,
        &verifier,
        None,
    )
    .unwrap();
    let evals: Vec<(u64, f64, f64)> = log
        .iter()
        .filter_map(|r| Some((r.step, r.eval_acc?, r.eval_hi_frac?)))
        .collect();
    for (s, a, h) in &evals {
        println!("  full step {s}: acc {a:.3} hi {h:.3}");
    }
    let tenth = cfg.max_steps / 10;
    let window = |evals: &[(u64, f64, f64)], lo: u64, hi: u64| {
        let pts: Vec<&(u64, f64, f64)> =
            evals.iter().filter(|(s, _, _)| *s >= lo && *s < hi).collect();
        let n = pts.len().max(1) as f64;
        (
            pts.iter().map(|(_, a, _)| a).sum::<f64>() / n,
            pts.iter().map(|(_, _, h)| h).sum::<f64>() / n,
        )
    };
    let (fa, fh) = window(&evals, 0, tenth);
    let (la2, lh) = window(&evals, cfg.max_steps - tenth, cfg.max_steps);
    println!("full summary: first10% acc {fa:.3} hi {fh:.3} | final10% acc {la2:.3} hi {lh:.3}");
    println!(
        "full run done ({:?}); last mean_r_acc {:.3} mean_r_lan {:.3}",
        t0.elapsed(),
        log.last().unwrap().mean_r_acc,
        log.last().unwrap().mean_r_lan
    );

    // Ablation: no language reward
    let mut ablated_policy = policy.clone();
    let ab_sched = DecaySchedule::constant(0.0, horizon).unwrap();
    let ab_log = dsr_run(
        &mut ablated_policy,
        &reference,
        &prompts,
        &eval_items,
        &cfg,
        &ab_sched,
        &verifier,
        None,
    )
    .unwrap();
    let ab_evals: Vec<(u64, f64, f64)> = ab_log
        .iter()
        .filter_map(|r| Some((r.step, r.eval_acc?, r.eval_hi_frac?)))
        .collect();
    for (s, a, h) in ab_evals.iter().rev().take(3) {
        println!("  ablation step {s}: acc {a:.3} hi {h:.3}");
    }
    let pts: Vec<&(u64, f64, f64)> = ab_evals
        .iter()
        .filter(|(s, _, _)| *s >= cfg.max_steps - tenth)
        .collect();
    let n = pts.len().max(1) as f64;
    println!(
        "ablation final10%: acc {:.3} hi {:.3}",
        pts.iter().map(|(_, a, _)| a).sum::<f64>() / n,
        pts.iter().map(|(_, _, h)| h).sum::<f64>() / n
    );
    println!("total {:?}", t0.elapsed());
}
