//! Horizontally partitioned training: every client holds complete rows of
//! its own wells. Clients agree on global bins, then for each tree node they
//! submit pairwise-masked (and, by default, Paillier-encrypted) gradient
//! histograms. The server only ever sees the sum over clients, from which
//! it picks splits and leaf weights. Histograms of the larger child of each
//! split are derived by subtraction from the parent.

mod client;
mod messages;
mod secagg;
mod server;

pub use client::{ClientAudit, HflClient};
pub use messages::{
    BinningBroadcast, HistogramSubmit, MaskedSums, ModelDelivery, NodeHistogram, PartitionCount, PartitionReport,
    PublicKeyMsg, RangeReport, SplitBroadcast, SplitDecision,
};
pub use secagg::{modular_masks, wrapping_masks, HflRoster, SecAggMode};
pub use server::{establish_global_binning, HflServer};

use crate::data::{horizontal_partition, PartyDataset};
use crate::error::{Error, Result};
use crate::gbt::{BinBoundaries, BoostedEnsemble, GbtParams};
use crate::orchestrator::{Bus, Envelope, MessageKind};
use crate::phe::Keypair;

/// Everything a horizontal run produces.
#[derive(Debug)]
pub struct HflOutcome {
    pub model: BoostedEnsemble,
    /// The final model as received by each client.
    pub client_models: Vec<BoostedEnsemble>,
    pub transcript: Vec<Envelope>,
    pub audit: Vec<ClientAudit>,
    pub binning: Vec<BinBoundaries>,
    pub keypair: Option<Keypair>,
}

fn abort(bus: &Bus, e: Error) -> Error {
    match e {
        Error::Protocol { .. } => e,
        other => Error::Protocol {
            position: bus.transcript().len(),
            reason: other.to_string(),
        },
    }
}

/// Runs the protocol. With `clients == None` only the server executes and
/// its inbound traffic comes from the bus's replay record.
fn drive(bus: &mut Bus, server: &mut HflServer, mut clients: Option<&mut [HflClient]>, n_trees: usize) -> Result<()> {
    let s = server.name().to_string();
    let names: Vec<String> = server_clients(server);
    bus.register(&s);
    for n in &names {
        bus.register(n);
    }
    let mut round = 0;

    if let Some(kp) = server.keypair() {
        let msg = PublicKeyMsg {
            public_key: kp.public.clone(),
        };
        bus.broadcast(&s, &names, round, MessageKind::PublicKey, &msg)?;
        if let Some(cs) = clients.as_deref_mut() {
            for c in cs.iter_mut() {
                let m: PublicKeyMsg = bus.recv(&c.name, &s, MessageKind::PublicKey)?;
                c.on_public_key(m.public_key).map_err(|e| abort(bus, e))?;
            }
        }
    }

    round += 1;
    if let Some(cs) = clients.as_deref_mut() {
        for c in cs.iter() {
            bus.send(&c.name, &s, round, MessageKind::RangeReport, &c.range_report())?;
        }
    }
    let reports: Vec<RangeReport> = bus.collect(&s, &names, MessageKind::RangeReport)?;
    let binning = server.on_ranges(&reports).map_err(|e| abort(bus, e))?;
    bus.broadcast(&s, &names, round, MessageKind::BinningBroadcast, &binning)?;
    if let Some(cs) = clients.as_deref_mut() {
        for c in cs.iter_mut() {
            let b: BinningBroadcast = bus.recv(&c.name, &s, MessageKind::BinningBroadcast)?;
            c.on_binning(&b).map_err(|e| abort(bus, e))?;
        }
    }

    for t in 0..n_trees {
        round += 1;
        if let Some(cs) = clients.as_deref_mut() {
            for c in cs.iter_mut() {
                let sub = c.start_tree(t).map_err(|e| abort(bus, e))?;
                bus.send(&c.name, &s, round, MessageKind::HistogramSubmit, &sub)?;
            }
        }
        let subs: Vec<HistogramSubmit> = bus.collect(&s, &names, MessageKind::HistogramSubmit)?;
        server.on_root(t, &subs).map_err(|e| abort(bus, e))?;

        loop {
            round += 1;
            let decision = server.decide_level().map_err(|e| abort(bus, e))?;
            bus.broadcast(&s, &names, round, MessageKind::SplitBroadcast, &decision)?;
            if let Some(cs) = clients.as_deref_mut() {
                for c in cs.iter_mut() {
                    let b: SplitBroadcast = bus.recv(&c.name, &s, MessageKind::SplitBroadcast)?;
                    let (report, submit) = c.on_split(&b).map_err(|e| abort(bus, e))?;
                    if let Some(r) = report {
                        bus.send(&c.name, &s, round, MessageKind::PartitionReport, &r)?;
                    }
                    if let Some(h) = submit {
                        bus.send(&c.name, &s, round, MessageKind::HistogramSubmit, &h)?;
                    }
                }
            }
            if !decision.splits.is_empty() {
                let reports: Vec<PartitionReport> = bus.collect(&s, &names, MessageKind::PartitionReport)?;
                server.on_partition(&reports).map_err(|e| abort(bus, e))?;
            }
            if !decision.request.is_empty() {
                let subs: Vec<HistogramSubmit> = bus.collect(&s, &names, MessageKind::HistogramSubmit)?;
                server.on_histograms(&subs).map_err(|e| abort(bus, e))?;
            }
            if server.tree_complete() {
                break;
            }
        }

        round += 1;
        let (index, tree) = server.finish_tree().map_err(|e| abort(bus, e))?;
        bus.broadcast(&s, &names, round, MessageKind::ModelDelivery, &ModelDelivery::Tree { index, tree })?;
        if let Some(cs) = clients.as_deref_mut() {
            for c in cs.iter_mut() {
                let m: ModelDelivery = bus.recv(&c.name, &s, MessageKind::ModelDelivery)?;
                c.on_model(m).map_err(|e| abort(bus, e))?;
            }
        }
    }

    round += 1;
    let model = server.model().cloned().expect("binning established");
    bus.broadcast(&s, &names, round, MessageKind::ModelDelivery, &ModelDelivery::Final { model })?;
    if let Some(cs) = clients {
        for c in cs.iter_mut() {
            let m: ModelDelivery = bus.recv(&c.name, &s, MessageKind::ModelDelivery)?;
            c.on_model(m).map_err(|e| abort(bus, e))?;
        }
    }
    Ok(())
}

fn server_clients(server: &HflServer) -> Vec<String> {
    server.roster().clients.clone()
}

/// Trains one model across sample-partitioned parties. Party names must
/// match the roster's clients, in roster order.
pub fn hfl_train(parties: &[PartyDataset], params: &GbtParams, roster: &HflRoster, seed: u64) -> Result<HflOutcome> {
    let parties = horizontal_partition(parties.to_vec())?;
    let names: Vec<&str> = parties.iter().map(|p| p.party.as_str()).collect();
    if names != roster.clients.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Config("parties do not match the roster".into()));
    }
    let mut server = HflServer::new(roster, params, seed)?;
    let mut clients = parties
        .into_iter()
        .map(|p| HflClient::new(roster, p, params, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut bus = Bus::new();
    drive(&mut bus, &mut server, Some(&mut clients), params.n_estimators)?;
    let model = server.model().cloned().expect("training completed");
    let client_models = clients
        .iter()
        .map(|c| c.model.clone().expect("final model delivered"))
        .collect();
    Ok(HflOutcome {
        binning: server.binning().to_vec(),
        keypair: server.keypair().cloned(),
        model,
        client_models,
        transcript: bus.into_transcript(),
        audit: clients.into_iter().map(|c| c.audit).collect(),
    })
}

/// Re-executes the server against a recorded transcript. Every message the
/// server sends must match the record; returns the rebuilt model.
pub fn hfl_replay(transcript: &[Envelope], params: &GbtParams, roster: &HflRoster, seed: u64) -> Result<BoostedEnsemble> {
    let mut server = HflServer::new(roster, params, seed)?;
    let mut bus = Bus::replay(&roster.server, transcript.to_vec());
    drive(&mut bus, &mut server, None, params.n_estimators)?;
    Ok(server.model().cloned().expect("replay completed"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthConfig};
    use crate::gbt::train_centralized;

    fn small_params() -> GbtParams {
        GbtParams {
            n_estimators: 3,
            max_depth: 3,
            max_bin: 8,
            ..GbtParams::default()
        }
    }

    fn parties() -> Vec<PartyDataset> {
        synth_generate(&SynthConfig::default()).unwrap()
    }

    fn roster(ps: &[PartyDataset], mode: SecAggMode) -> HflRoster {
        HflRoster::new(ps.iter().map(|p| p.party.clone()).collect(), mode, 256, 5).unwrap()
    }

    #[test]
    fn mask_mode_matches_centralized() {
        let ps = parties();
        let p = small_params();
        let out = hfl_train(&ps, &p, &roster(&ps, SecAggMode::Mask), 1).unwrap();
        let pooled = PartyDataset::concat("pooled", &[&ps[0], &ps[1]]).unwrap();
        let central = train_centralized(&pooled, &p, 1).unwrap();
        assert_eq!(out.model.hash(), central.hash());
        assert!(out.client_models.iter().all(|m| m.hash() == central.hash()));
    }

    #[test]
    fn paillier_mode_matches_centralized_and_replays() {
        let ps = parties();
        let p = GbtParams {
            n_estimators: 1,
            max_depth: 2,
            max_bin: 4,
            ..GbtParams::default()
        };
        let r = roster(&ps, SecAggMode::Paillier);
        let out = hfl_train(&ps, &p, &r, 2).unwrap();
        let pooled = PartyDataset::concat("pooled", &[&ps[0], &ps[1]]).unwrap();
        assert_eq!(out.model.hash(), train_centralized(&pooled, &p, 2).unwrap().hash());
        let again = hfl_replay(&out.transcript, &p, &r, 2).unwrap();
        assert_eq!(again.hash(), out.model.hash());
    }

    #[test]
    fn tampered_transcript_fails_replay() {
        let ps = parties();
        let p = small_params();
        let r = roster(&ps, SecAggMode::Mask);
        let mut out = hfl_train(&ps, &p, &r, 1).unwrap();
        let i = out
            .transcript
            .iter()
            .position(|e| e.kind == MessageKind::HistogramSubmit)
            .unwrap();
        let mut sub: HistogramSubmit = serde_json::from_str(&out.transcript[i].payload).unwrap();
        if let MaskedSums::Wrapping { g, .. } = &mut sub.nodes[0].sums {
            g[0] = g[0].wrapping_add(1 << 45);
        }
        out.transcript[i].payload = serde_json::to_string(&sub).unwrap();
        assert!(hfl_replay(&out.transcript, &p, &r, 1).is_err());
    }

    #[test]
    fn schema_mismatch_aborts() {
        let mut ps = parties();
        ps[1] = ps[1].select_features(&(0..31).collect::<Vec<_>>());
        let r = roster(&ps, SecAggMode::Mask);
        assert!(hfl_train(&ps, &small_params(), &r, 0).is_err());
    }
}
