//! Deterministic synthetic web: an entity graph with pages, rarity metadata,
//! image descriptors, and search indices, implementing the tool-backend
//! interface.
//!
//! Each statement fact is rendered on exactly one page (its subject's), so a
//! question that hides an entity behind one of its facts provably requires a
//! lookup on that page. Entity-valued first statements always link to a
//! strictly higher entity index, which keeps synthesis chains acyclic. Images
//! are opaque URL descriptors: recovering the owning page via image search
//! stands in for visual identification without any pixels.

pub mod backends;
pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tools::{
    ImageSearchResult, TextSearchResult, ToolBackend, ToolError, VisitResult, RESULT_CAP,
};

const ADJ_POOL: [&str; 24] = [
    "Amber", "Basalt", "Cedar", "Dusky", "Ember", "Fallow", "Gilded", "Hollow", "Ivory", "Juniper",
    "Kiln", "Larch", "Mottled", "Northern", "Opal", "Pewter", "Quarry", "Russet", "Slate", "Tidal",
    "Umber", "Velvet", "Winter", "Yonder",
];

const NOUN_POOL: [&str; 24] = [
    "Anchor", "Beacon", "Causeway", "Delta", "Escarpment", "Fjord", "Grove", "Headland", "Isthmus",
    "Junction", "Knoll", "Lagoon", "Meadow", "Nook", "Orchard", "Promontory", "Quay", "Ridge",
    "Spire", "Terrace", "Upland", "Vale", "Weir", "Zenith",
];

const SUFFIX_POOL: [&str; 16] = [
    "Archive", "Observatory", "Pavilion", "Institute", "Conservatory", "Foundry", "Gallery",
    "Seminary", "Workshop", "Atelier", "Repository", "Lyceum", "Mill", "Theatre", "Academy",
    "Museum",
];

const ENTITY_PREDICATE_POOL: [&str; 6] = [
    "was catalogued in registry {code} jointly with",
    "was surveyed during expedition {code} alongside",
    "was twinned under charter {code} with",
    "was restored through grant {code} together with",
    "was archived in collection {code} beside",
    "was federated by accord {code} with",
];

/// Literal-fact predicates paired with the question shell the initial QA step
/// builds from them.
pub const LITERAL_PREDICATE_POOL: [(&str, &str); 5] = [
    ("preserves", "What does {entity} preserve?"),
    ("displays", "What does {entity} display?"),
    ("commemorates", "What does {entity} commemorate?"),
    ("houses", "What does {entity} house?"),
    ("safeguards", "What does {entity} safeguard?"),
];

const LITERAL_ADJ_POOL: [&str; 10] = [
    "cobalt", "vermilion", "saffron", "ochre", "sepia", "cerulean", "crimson", "viridian",
    "burnished", "lacquered",
];

const LITERAL_NOUN_POOL: [&str; 10] = [
    "ledger", "astrolabe", "tapestry", "orrery", "folio", "sundial", "reliquary", "herbarium",
    "codex", "armillary",
];

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WorldConfig {
    pub n_entities: usize,
    /// Fraction of entities passing the rare-and-rich seed gate.
    pub rarity_fraction: f64,
    /// Fraction of entities carrying an image descriptor.
    pub image_fraction: f64,
    pub rare_sitelinks_max: u32,
    pub common_sitelinks_max: u32,
    pub rich_statements_min: u32,
    pub rich_statements_max: u32,
    pub sparse_statements_min: u32,
    pub entity_links_min: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            n_entities: 200,
            rarity_fraction: 0.3,
            image_fraction: 1.0,
            rare_sitelinks_max: 10,
            common_sitelinks_max: 200,
            rich_statements_min: 20,
            rich_statements_max: 26,
            sparse_statements_min: 10,
            entity_links_min: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("bad distribution: {0}")]
    BadDistribution(String),
    #[error("world file malformed: {0}")]
    Malformed(String),
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        let fail = |msg: &str| Err(WorldError::BadDistribution(msg.to_string()));
        if self.n_entities == 0 {
            return fail("n_entities must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.rarity_fraction) {
            return fail("rarity_fraction must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.image_fraction) {
            return fail("image_fraction must lie in [0, 1]");
        }
        if self.common_sitelinks_max <= self.rare_sitelinks_max {
            return fail("common_sitelinks_max must exceed rare_sitelinks_max");
        }
        if self.rich_statements_max < self.rich_statements_min {
            return fail("rich statement range inverted");
        }
        if self.sparse_statements_min >= self.rich_statements_min {
            return fail("sparse_statements_min must fall below rich_statements_min");
        }
        if self.entity_links_min == 0 {
            return fail("entity_links_min must be at least 1");
        }
        if self.sparse_statements_min <= self.entity_links_min + 1 {
            return fail("sparse_statements_min leaves no room for literal facts");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SimObject {
    Entity(String),
    Literal(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SimStatement {
    pub predicate: String,
    pub object: SimObject,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SimEntity {
    pub entity_id: String,
    pub label: String,
    pub sitelinks: u32,
    pub declared_statements: u32,
    pub statements: Vec<SimStatement>,
    pub page_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_descriptor: Option<String>,
    pub out_links: Vec<String>,
}

impl SimEntity {
    /// First entity-valued statement: the hop used by synthesis chains.
    pub fn first_entity_fact(&self) -> Option<&SimStatement> {
        self.statements
            .iter()
            .find(|s| matches!(s.object, SimObject::Entity(_)))
    }

    /// First literal-valued statement: the fact behind the initial QA pair.
    pub fn first_literal_fact(&self) -> Option<&SimStatement> {
        self.statements
            .iter()
            .find(|s| matches!(s.object, SimObject::Literal(_)))
    }
}

/// Case-insensitive normalization used for all label/substring matching.
pub fn normalize(s: &str) -> String {
    s.to_lowercase()
}

/// Lowercased alphanumeric token runs.
pub fn tokenize(s: &str) -> Vec<String> {
    s.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

#[derive(Serialize, Deserialize)]
struct WorldFile {
    rng_seed: u64,
    config: WorldConfig,
    entities: Vec<SimEntity>,
}

/// Immutable world: entities plus derived text and image indices.
#[derive(Debug)]
pub struct SimWorld {
    pub rng_seed: u64,
    pub config: WorldConfig,
    entities: Vec<SimEntity>,
    id_index: BTreeMap<String, usize>,
    label_index: BTreeMap<String, usize>,
    token_index: BTreeMap<String, Vec<usize>>,
    entity_tokens: Vec<BTreeSet<String>>,
    image_index: BTreeMap<String, usize>,
}

impl SimWorld {
    pub fn entities(&self) -> &[SimEntity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn page_url(entity_id: &str) -> String {
        format!("https://sim.wiki/wiki/{entity_id}")
    }

    pub fn image_url(entity_id: &str) -> String {
        format!("https://sim.wiki/img/{entity_id}.png")
    }

    pub fn entity_by_id(&self, id: &str) -> Option<&SimEntity> {
        self.id_index.get(id).map(|&i| &self.entities[i])
    }

    pub fn entity_by_label(&self, label: &str) -> Option<&SimEntity> {
        self.label_index
            .get(&normalize(label))
            .map(|&i| &self.entities[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn entity_for_page_url(&self, url: &str) -> Option<&SimEntity> {
        let id = url.strip_prefix("https://sim.wiki/wiki/")?;
        self.entity_by_id(id)
    }

    pub fn entity_for_image(&self, descriptor: &str) -> Option<&SimEntity> {
        self.image_index.get(descriptor).map(|&i| &self.entities[i])
    }

    /// Entities satisfying the rarity gate exactly as a seed scan would.
    pub fn gate_passing(&self, max_sitelinks: u32, min_statements: u32) -> Vec<&SimEntity> {
        self.entities
            .iter()
            .filter(|e| e.sitelinks <= max_sitelinks && e.declared_statements >= min_statements)
            .collect()
    }

    /// All entity labels contained in `text` (normalized), in entity order.
    pub fn labels_in_text(&self, text: &str) -> Vec<&SimEntity> {
        let haystack = normalize(text);
        self.entities
            .iter()
            .filter(|e| haystack.contains(&normalize(&e.label)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for entity in &self.entities {
            if entity.statements.len() as u32 != entity.declared_statements {
                return Err(WorldError::Malformed(format!(
                    "{}: statement count {} differs from declared {}",
                    entity.entity_id,
                    entity.statements.len(),
                    entity.declared_statements
                )));
            }
            for link in &entity.out_links {
                if !self.id_index.contains_key(link) {
                    return Err(WorldError::Malformed(format!(
                        "{}: out_link {link} does not resolve",
                        entity.entity_id
                    )));
                }
            }
        }
        Ok(())
    }

    fn from_parts(rng_seed: u64, config: WorldConfig, entities: Vec<SimEntity>) -> Self {
        let mut id_index = BTreeMap::new();
        let mut label_index = BTreeMap::new();
        let mut token_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut entity_tokens = Vec::with_capacity(entities.len());
        let mut image_index = BTreeMap::new();
        for (i, entity) in entities.iter().enumerate() {
            id_index.insert(entity.entity_id.clone(), i);
            label_index.insert(normalize(&entity.label), i);
            let tokens: BTreeSet<String> = tokenize(&entity.page_text).into_iter().collect();
            for token in &tokens {
                token_index.entry(token.clone()).or_default().push(i);
            }
            entity_tokens.push(tokens);
            if let Some(desc) = &entity.image_descriptor {
                image_index.insert(desc.clone(), i);
            }
        }
        Self {
            rng_seed,
            config,
            entities,
            id_index,
            label_index,
            token_index,
            entity_tokens,
            image_index,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&WorldFile {
            rng_seed: self.rng_seed,
            config: self.config.clone(),
            entities: self.entities.clone(),
        })
        .expect("world serialization")
    }

    pub fn from_json(raw: &str) -> Result<Self, WorldError> {
        let file: WorldFile =
            serde_json::from_str(raw).map_err(|e| WorldError::Malformed(e.to_string()))?;
        let world = Self::from_parts(file.rng_seed, file.config, file.entities);
        world.validate()?;
        Ok(world)
    }
}

/// Generate a world deterministically from a seed and size parameters.
///
/// A `rarity_fraction` share of entities (the lowest indices) satisfies the
/// seed gate; the rest alternate between too-common and too-sparse. The first
/// entity-valued statement of entity `i` targets an index in `i+1..=i+3`
/// (clamped), so synthesis chains walk strictly upward.
pub fn generate_world(rng_seed: u64, config: WorldConfig) -> Result<SimWorld, WorldError> {
    config.validate()?;
    let n = config.n_entities;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    // Unique labels; identical 3-word shape means no label contains another.
    let mut labels = Vec::with_capacity(n);
    let mut used = std::collections::HashSet::new();
    while labels.len() < n {
        let label = format!(
            "{} {} {}",
            ADJ_POOL[rng.random_range(0..ADJ_POOL.len())],
            NOUN_POOL[rng.random_range(0..NOUN_POOL.len())],
            SUFFIX_POOL[rng.random_range(0..SUFFIX_POOL.len())]
        );
        if used.insert(label.clone()) {
            labels.push(label);
        }
    }

    let n_pass = ((n as f64) * config.rarity_fraction).round() as usize;
    let n_pass = n_pass.min(n);
    let mut code_counter: u64 = 0;
    let mut entities = Vec::with_capacity(n);

    for (i, label) in labels.iter().enumerate() {
        let passes = i < n_pass;
        let (sitelinks, n_statements) = if passes {
            (
                rng.random_range(0..=config.rare_sitelinks_max),
                rng.random_range(config.rich_statements_min..=config.rich_statements_max),
            )
        } else if i % 2 == 0 {
            // Too common, still richly documented.
            (
                rng.random_range(config.rare_sitelinks_max + 1..=config.common_sitelinks_max),
                rng.random_range(config.rich_statements_min..=config.rich_statements_max),
            )
        } else {
            // Rare but too sparsely documented.
            (
                rng.random_range(0..=config.rare_sitelinks_max),
                rng.random_range(config.sparse_statements_min..config.rich_statements_min),
            )
        };

        let n_entity_facts =
            (config.entity_links_min + rng.random_range(0..=1)).min(n_statements - 1) as usize;
        let mut statements = Vec::with_capacity(n_statements as usize);
        for k in 0..n_statements as usize {
            if k < n_entity_facts {
                code_counter += 1;
                let template =
                    ENTITY_PREDICATE_POOL[rng.random_range(0..ENTITY_PREDICATE_POOL.len())];
                let predicate = template.replace("{code}", &format!("R-{code_counter:05}"));
                let target = if k == 0 {
                    // Chain hop: strictly upward, small jump.
                    if i + 1 >= n {
                        0
                    } else {
                        (i + 1 + rng.random_range(0..3usize)).min(n - 1)
                    }
                } else {
                    // Flavor links anywhere but self.
                    let mut t = rng.random_range(0..n);
                    if t == i {
                        t = (t + 1) % n;
                    }
                    t
                };
                statements.push(SimStatement {
                    predicate,
                    object: SimObject::Entity(format!("E{target:05}")),
                });
            } else {
                let (pred, _) =
                    LITERAL_PREDICATE_POOL[rng.random_range(0..LITERAL_PREDICATE_POOL.len())];
                let literal = format!(
                    "the {} {}",
                    LITERAL_ADJ_POOL[rng.random_range(0..LITERAL_ADJ_POOL.len())],
                    LITERAL_NOUN_POOL[rng.random_range(0..LITERAL_NOUN_POOL.len())]
                );
                statements.push(SimStatement {
                    predicate: pred.to_string(),
                    object: SimObject::Literal(literal),
                });
            }
        }

        let image_descriptor = if rng.random_bool(config.image_fraction.clamp(0.0, 1.0)) {
            Some(SimWorld::image_url(&format!("E{i:05}")))
        } else {
            None
        };

        entities.push(SimEntity {
            entity_id: format!("E{i:05}"),
            label: label.clone(),
            sitelinks,
            declared_statements: n_statements,
            statements,
            page_text: String::new(),
            image_descriptor,
            out_links: Vec::new(),
        });
    }

    // Assemble pages and out-links once statements are settled.
    let label_of: Vec<String> = entities.iter().map(|e| e.label.clone()).collect();
    for entity in entities.iter_mut() {
        let mut lines = vec![
            format!("{}.", entity.label),
            format!(
                "{} has {} sitelinks and {} statements.",
                entity.label, entity.sitelinks, entity.declared_statements
            ),
        ];
        let mut out_links = Vec::new();
        for statement in &entity.statements {
            let object_str = match &statement.object {
                SimObject::Entity(id) => {
                    out_links.push(id.clone());
                    let idx: usize = id[1..].parse().expect("entity id");
                    label_of[idx].clone()
                }
                SimObject::Literal(lit) => lit.clone(),
            };
            lines.push(format!("{} {} {}.", entity.label, statement.predicate, object_str));
        }
        entity.page_text = lines.join("\n");
        entity.out_links = out_links;
    }

    let world = SimWorld::from_parts(rng_seed, config, entities);
    world.validate()?;
    Ok(world)
}

/// Tool backend querying a [`SimWorld`].
///
/// Ranking is deterministic: exact label match first, then distinct-token
/// overlap, ties broken by entity order.
pub struct SimBackend {
    world: Arc<SimWorld>,
}

impl SimBackend {
    pub fn new(world: Arc<SimWorld>) -> Self {
        Self { world }
    }

    pub fn world(&self) -> &Arc<SimWorld> {
        &self.world
    }

    fn best_line<'a>(page_text: &'a str, query_tokens: &BTreeSet<String>) -> (&'a str, usize) {
        let mut best: (&str, usize) = (page_text.lines().next().unwrap_or(""), 0);
        for line in page_text.lines() {
            let line_tokens: BTreeSet<String> = tokenize(line).into_iter().collect();
            let overlap = line_tokens.intersection(query_tokens).count();
            if overlap > best.1 {
                best = (line, overlap);
            }
        }
        best
    }
}

impl ToolBackend for SimBackend {
    fn text_search(&self, query: &str) -> Result<Vec<TextSearchResult>, ToolError> {
        let query_tokens: BTreeSet<String> = tokenize(query).into_iter().collect();
        let normalized_query = normalize(query.trim());
        let mut scored: Vec<(bool, usize, usize)> = Vec::new();
        let mut seen = BTreeSet::new();
        for token in &query_tokens {
            if let Some(indices) = self.world.token_index.get(token) {
                for &i in indices {
                    if seen.insert(i) {
                        let overlap = self.world.entity_tokens[i]
                            .intersection(&query_tokens)
                            .count();
                        let exact =
                            normalize(&self.world.entities[i].label) == normalized_query;
                        scored.push((exact, overlap, i));
                    }
                }
            }
        }
        scored.sort_by(|a, b| {
            b.0.cmp(&a.0)
                .then(b.1.cmp(&a.1))
                .then(a.2.cmp(&b.2))
        });
        Ok(scored
            .into_iter()
            .take(RESULT_CAP)
            .map(|(_, _, i)| {
                let entity = &self.world.entities[i];
                let (line, _) = Self::best_line(&entity.page_text, &query_tokens);
                TextSearchResult {
                    link: SimWorld::page_url(&entity.entity_id),
                    title: entity.label.clone(),
                    snippet: line.to_string(),
                }
            })
            .collect())
    }

    fn image_search(&self, task_image: &str) -> Result<Vec<ImageSearchResult>, ToolError> {
        let Some(&owner_idx) = self.world.image_index.get(task_image) else {
            return Ok(Vec::new());
        };
        let mut results = Vec::with_capacity(RESULT_CAP);
        let owner = &self.world.entities[owner_idx];
        results.push(ImageSearchResult {
            image_url: task_image.to_string(),
            page_link: SimWorld::page_url(&owner.entity_id),
            page_title: owner.label.clone(),
        });
        // Distractors: subsequent entities with images, wrapping around.
        let n = self.world.entities.len();
        let mut cursor = (owner_idx + 1) % n;
        while results.len() < RESULT_CAP && cursor != owner_idx {
            let entity = &self.world.entities[cursor];
            if let Some(desc) = &entity.image_descriptor {
                results.push(ImageSearchResult {
                    image_url: desc.clone(),
                    page_link: SimWorld::page_url(&entity.entity_id),
                    page_title: entity.label.clone(),
                });
            }
            cursor = (cursor + 1) % n;
        }
        Ok(results)
    }

    fn visit(&self, url: &str, goal: &str) -> Result<VisitResult, ToolError> {
        let Some(entity) = self.world.entity_for_page_url(url) else {
            return Err(ToolError::FetchFailed(format!("no sim page at {url}")));
        };
        let goal_tokens: BTreeSet<String> = tokenize(goal).into_iter().collect();
        let (line, overlap) = Self::best_line(&entity.page_text, &goal_tokens);
        let summary = if overlap == 0 {
            entity
                .page_text
                .lines()
                .next()
                .unwrap_or_default()
                .to_string()
        } else {
            line.to_string()
        };
        Ok(VisitResult {
            url: url.to_string(),
            goal: goal.to_string(),
            summary,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_world(seed: u64, n: usize) -> SimWorld {
        generate_world(
            seed,
            WorldConfig {
                n_entities: n,
                ..WorldConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn identical_seeds_give_identical_worlds() {
        let a = small_world(7, 100);
        let b = small_world(7, 100);
        assert_eq!(a.to_json(), b.to_json());
        let c = small_world(8, 100);
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn rarity_fraction_controls_gate_count() {
        let world = small_world(3, 100);
        let passing = world.gate_passing(10, 20);
        assert_eq!(passing.len(), 30);
    }

    #[test]
    fn zero_entities_is_bad_distribution() {
        let err = generate_world(
            1,
            WorldConfig {
                n_entities: 0,
                ..WorldConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, WorldError::BadDistribution(_)));
    }

    #[test]
    fn label_search_self_retrieves() {
        let world = Arc::new(small_world(11, 120));
        let backend = SimBackend::new(Arc::clone(&world));
        for entity in world.entities().iter().take(20) {
            let results = backend.text_search(&entity.label).unwrap();
            assert_eq!(results[0].link, SimWorld::page_url(&entity.entity_id));
            assert!(results.len() <= RESULT_CAP);
        }
    }

    #[test]
    fn image_search_returns_owner_first() {
        let world = Arc::new(small_world(13, 60));
        let backend = SimBackend::new(Arc::clone(&world));
        let entity = &world.entities()[5];
        let descriptor = entity.image_descriptor.clone().unwrap();
        let results = backend.image_search(&descriptor).unwrap();
        assert_eq!(results[0].page_link, SimWorld::page_url(&entity.entity_id));
        let mut pages: Vec<_> = results.iter().map(|r| r.page_link.clone()).collect();
        pages.dedup();
        assert_eq!(pages.len(), results.len(), "one image per page");
    }

    #[test]
    fn visit_returns_goal_matching_fact_line() {
        let world = Arc::new(small_world(17, 60));
        let backend = SimBackend::new(Arc::clone(&world));
        let entity = &world.entities()[2];
        let fact = entity.first_entity_fact().unwrap().clone();
        let url = SimWorld::page_url(&entity.entity_id);
        let result = backend.visit(&url, &fact.predicate).unwrap();
        assert!(result.summary.contains(&fact.predicate));
        assert!(result.summary.starts_with(&entity.label));
    }

    #[test]
    fn visit_unknown_page_fails() {
        let world = Arc::new(small_world(17, 10));
        let backend = SimBackend::new(world);
        let err = backend
            .visit("https://sim.wiki/wiki/E99999", "anything")
            .unwrap_err();
        assert!(matches!(err, ToolError::FetchFailed(_)));
    }

    #[test]
    fn chain_links_walk_strictly_upward() {
        let world = small_world(23, 150);
        for (i, entity) in world.entities().iter().enumerate() {
            if i + 1 == world.len() {
                continue;
            }
            let fact = entity.first_entity_fact().unwrap();
            let SimObject::Entity(target) = &fact.object else {
                panic!("first entity fact must target an entity")
            };
            let target_idx = world.index_of(target).unwrap();
            assert!(target_idx > i, "chain hop must increase index");
            assert!(target_idx <= i + 3);
        }
    }

    #[test]
    fn world_round_trips_through_json() {
        let world = small_world(29, 40);
        let json = world.to_json();
        let back = SimWorld::from_json(&json).unwrap();
        assert_eq!(world.to_json(), back.to_json());
        assert_eq!(back.len(), 40);
    }

    #[test]
    fn facts_live_on_exactly_one_page() {
        let world = small_world(31, 80);
        // Every entity-fact predicate carries a unique registry code, so the
        // code token appears in exactly one page.
        for entity in world.entities() {
            for statement in &entity.statements {
                if let SimObject::Entity(_) = statement.object {
                    let code_token = statement
                        .predicate
                        .split_whitespace()
                        .find(|w| w.starts_with("R-"))
                        .unwrap()
                        .to_lowercase()
                        .replace('-', " ");
                    let code_num = code_token.split_whitespace().last().unwrap().to_string();
                    let holders: Vec<_> = world
                        .entities()
                        .iter()
                        .filter(|e| e.page_text.contains(&statement.predicate))
                        .collect();
                    assert_eq!(
                        holders.len(),
                        1,
                        "code {code_num} must appear on exactly one page"
                    );
                }
            }
        }
    }
}
