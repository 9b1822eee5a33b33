//! Shared builders for the benchmarks.

use std::sync::Arc;

use flocksim_core::content::ContentDescriptor;
use flocksim_core::platform::{AccountId, AccountSpec, Archetype, Platform, PostKind};
use flocksim_core::time::SimTime;

/// A platform with `accounts` accounts, a light follow graph, and
/// `posts` hashtagged posts spread over a day.
pub fn seeded_platform(accounts: u32, posts: u64) -> Platform {
    let mut p = Platform::default();
    for i in 0..accounts {
        p.create_account(AccountSpec {
            handle: format!("u{i}"),
            created_at: SimTime::from_secs(i as u64),
            profile_completeness: 0.6,
            locale: Arc::from("ww"),
            archetype: Archetype::Human,
        })
        .unwrap();
    }
    for i in 0..accounts {
        for d in 1..=8u32 {
            let target = (i + d * 7) % accounts;
            if target != i {
                let _ = p.set_follow(AccountId(i), AccountId(target), SimTime::from_secs(1_000 + i as u64));
            }
        }
    }
    for i in 0..posts {
        let author = AccountId((i % accounts as u64) as u32);
        let tag: Arc<str> = Arc::from(format!("#t{}", i % 40).as_str());
        p.submit_post(
            author,
            ContentDescriptor {
                length: 60 + (i % 90) as u32,
                token_entropy: 3.0 + (i % 20) as f64 / 10.0,
                hashtags: vec![tag],
                emoticon_count: (i % 3) as u32,
                polarity: ((i % 21) as f64 - 10.0) / 10.0,
                slang_fraction: (i % 10) as f64 / 20.0,
                text: None,
            },
            PostKind::Original,
            None,
            SimTime::from_secs(2_000 + i * 10),
        )
        .unwrap();
    }
    p
}
