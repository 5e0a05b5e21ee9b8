// Diagnostic: register-decision probability after RC, per seed offset.
use dsr_core::dataset::TrainRecord;
use dsr_core::policy::Policy;
use dsr_core::synthdata::{generate_world, WorldSpec};
use dsr_core::training::*;

fn main() {
    for off in [0u64, 10, 20, 30] {
        let spec = WorldSpec { n_keys: 25, n_options: 5, chain_len: 23, seed: 7 + off };
        let (world, train, _eval) = generate_world(spec, 600, 50).unwrap();
        let records: Vec<TrainRecord> = train.iter().map(|i| i.to_train_record()).collect();
        let mut policy = Policy::init(world.vocab.clone(), 12, 42 + off);
        let la = build_sft_dataset(&records, &world.vocab, Stage::La, 32).unwrap();
        let la_cfg = TrainConfig { batch_size: 16, learning_rate: 0.02, max_steps: 200, seed: 1 + off, optimizer: OptimizerKind::Adam, ..Default::default() };
        sft_stage(&mut policy, &la, &la_cfg, Stage::La).unwrap();
        let rc = build_sft_dataset(&records, &world.vocab, Stage::Rc, 32).unwrap();
        let rc_cfg = TrainConfig { batch_size: 16, learning_rate: 0.02, max_steps: 1200, seed: 2 + off, optimizer: OptimizerKind::Adam, ..Default::default() };
        sft_stage(&mut policy, &rc, &rc_cfg, Stage::Rc).unwrap();

        // P(first chain token is hindi | <think>, bag) per prompt: average over
        // 20 train prompts and 10 eval prompts.
        let mut ratios = Vec::new();
        for rec in records.iter().take(20) {
            let bag = world.vocab.prompt_bag(&rec.question);
            let dist = policy.log_dist(Some(world.vocab.think_open()), &bag).unwrap();
            let hi: f64 = world.chain.iter().map(|p| dist[p.hi as usize].exp()).sum();
            let en: f64 = world.chain.iter().map(|p| dist[p.en as usize].exp()).sum();
            ratios.push(hi / (hi + en));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // Also register consistency within the chain: P(hi_2 | hi_1) etc.
        let bag = world.vocab.prompt_bag(&records[0].question);
        let d_hi = policy.log_dist(Some(world.chain[0].hi), &bag).unwrap();
        let p_cont_hi = d_hi[world.chain[1].hi as usize].exp();
        let p_cross = d_hi[world.chain[1].en as usize].exp();
        println!(
            "off {off}: P(c1=hi) mean {mean:.3} [{min:.3},{max:.3}] | P(hi2|hi1) {p_cont_hi:.3} cross {p_cross:.3}"
        );
    }
}
