//! Domain types for procedural paragraphs, per-cell state changes and
//! step-to-step dependency graphs.
//!
//! Steps and entities are 1-based in every public API (`s_1..s_T`), while the
//! underlying storage is 0-based. Helpers on [`StateChangeMatrix`] take 1-based
//! step indices and 0-based entity column indices; the asymmetry mirrors how
//! the decoder walks a matrix (one step at a time, all entity columns).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mention::normalize;

/// The four state changes an entity can undergo at a step.
///
/// The declaration order fixes the integer encoding used by the decoder's
/// tie-break rule (`Create=0, Move=1, Destroy=2, None=3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChangeKind {
    Create,
    Move,
    Destroy,
    None,
}

impl ChangeKind {
    pub const ALL: [ChangeKind; 4] = [
        ChangeKind::Create,
        ChangeKind::Move,
        ChangeKind::Destroy,
        ChangeKind::None,
    ];

    pub fn index(self) -> usize {
        match self {
            ChangeKind::Create => 0,
            ChangeKind::Move => 1,
            ChangeKind::Destroy => 2,
            ChangeKind::None => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<ChangeKind> {
        ChangeKind::ALL.get(i).copied()
    }

    /// Single-character grid code: `C`, `M`, `D` or `-`.
    pub fn code(self) -> &'static str {
        match self {
            ChangeKind::Create => "C",
            ChangeKind::Move => "M",
            ChangeKind::Destroy => "D",
            ChangeKind::None => "-",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChangeKind::Create => "CREATE",
            ChangeKind::Move => "MOVE",
            ChangeKind::Destroy => "DESTROY",
            ChangeKind::None => "NONE",
        }
    }

    /// Accepts grid codes and full names, case-insensitively.
    pub fn parse(s: &str) -> Option<ChangeKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c" | "create" => Some(ChangeKind::Create),
            "m" | "move" => Some(ChangeKind::Move),
            "d" | "destroy" => Some(ChangeKind::Destroy),
            "-" | "n" | "none" => Some(ChangeKind::None),
            _ => None,
        }
    }
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChangeKind::Create => "Create",
            ChangeKind::Move => "Move",
            ChangeKind::Destroy => "Destroy",
            ChangeKind::None => "None",
        };
        f.write_str(s)
    }
}

/// A state change with its optional location arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateChange {
    kind: ChangeKind,
    from_loc: Option<String>,
    to_loc: Option<String>,
}

impl StateChange {
    pub fn none() -> Self {
        Self::bare(ChangeKind::None)
    }

    pub fn bare(kind: ChangeKind) -> Self {
        StateChange {
            kind,
            from_loc: None,
            to_loc: None,
        }
    }

    pub fn create(to_loc: Option<String>) -> Self {
        StateChange {
            kind: ChangeKind::Create,
            from_loc: None,
            to_loc: clean_loc(to_loc),
        }
    }

    pub fn moved(from_loc: Option<String>, to_loc: Option<String>) -> Self {
        StateChange {
            kind: ChangeKind::Move,
            from_loc: clean_loc(from_loc),
            to_loc: clean_loc(to_loc),
        }
    }

    pub fn destroy(from_loc: Option<String>) -> Self {
        StateChange {
            kind: ChangeKind::Destroy,
            from_loc: clean_loc(from_loc),
            to_loc: None,
        }
    }

    /// Builds a change, rejecting location arguments the kind cannot carry.
    pub fn new(
        kind: ChangeKind,
        from_loc: Option<String>,
        to_loc: Option<String>,
    ) -> Result<Self, ModelError> {
        let from_loc = clean_loc(from_loc);
        let to_loc = clean_loc(to_loc);
        let ok = match kind {
            ChangeKind::None => from_loc.is_none() && to_loc.is_none(),
            ChangeKind::Create => from_loc.is_none(),
            ChangeKind::Destroy => to_loc.is_none(),
            ChangeKind::Move => true,
        };
        if !ok {
            return Err(ModelError::InvalidLocations(kind));
        }
        Ok(StateChange {
            kind,
            from_loc,
            to_loc,
        })
    }

    /// Keeps only the locations `kind` may carry.
    pub fn with_kind_from_locations(
        kind: ChangeKind,
        from_loc: Option<&str>,
        to_loc: Option<&str>,
    ) -> Self {
        let from = from_loc.map(str::to_string);
        let to = to_loc.map(str::to_string);
        match kind {
            ChangeKind::None => StateChange::none(),
            ChangeKind::Create => StateChange::create(to),
            ChangeKind::Move => StateChange::moved(from, to),
            ChangeKind::Destroy => StateChange::destroy(from),
        }
    }

    pub fn kind(&self) -> ChangeKind {
        self.kind
    }

    pub fn from_loc(&self) -> Option<&str> {
        self.from_loc.as_deref()
    }

    pub fn to_loc(&self) -> Option<&str> {
        self.to_loc.as_deref()
    }

    pub fn is_none(&self) -> bool {
        self.kind == ChangeKind::None
    }
}

impl Default for StateChange {
    fn default() -> Self {
        StateChange::none()
    }
}

/// `"?"` and blank strings mean "unknown location", stored as `None`.
fn clean_loc(loc: Option<String>) -> Option<String> {
    loc.and_then(|l| {
        let t = l.trim();
        if t.is_empty() || t == "?" {
            None
        } else {
            Some(t.to_string())
        }
    })
}

/// Existence of one entity as a matrix column is folded step by step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExistenceState {
    Unknown,
    Exists,
    Destroyed,
}

impl fmt::Display for ExistenceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExistenceState::Unknown => "Unknown",
            ExistenceState::Exists => "Exists",
            ExistenceState::Destroyed => "Destroyed",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("inconsistent transition: {change} while {state}")]
pub struct InconsistentTransition {
    pub state: ExistenceState,
    pub change: ChangeKind,
}

/// Successor of `state` after `change`.
///
/// Entities start `Unknown` so that anything present before the process
/// begins may be moved or destroyed without an explicit creation. Nothing
/// happens to a destroyed entity until it is created again.
pub fn apply_change(
    state: ExistenceState,
    change: ChangeKind,
) -> Result<ExistenceState, InconsistentTransition> {
    use ChangeKind as K;
    use ExistenceState as S;
    match (state, change) {
        (S::Unknown, K::Create) => Ok(S::Exists),
        (S::Unknown, K::Move) => Ok(S::Exists),
        (S::Unknown, K::Destroy) => Ok(S::Destroyed),
        (S::Unknown, K::None) => Ok(S::Unknown),
        (S::Exists, K::Move) => Ok(S::Exists),
        (S::Exists, K::Destroy) => Ok(S::Destroyed),
        (S::Exists, K::None) => Ok(S::Exists),
        (S::Destroyed, K::Create) => Ok(S::Exists),
        (S::Destroyed, K::None) => Ok(S::Destroyed),
        (S::Exists, K::Create) | (S::Destroyed, K::Move) | (S::Destroyed, K::Destroy) => {
            Err(InconsistentTransition { state, change })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("entity name must not be empty")]
    EmptyEntityName,
    #[error("process `{0}` has no steps")]
    NoSteps(String),
    #[error("process `{0}` has no entities")]
    NoEntities(String),
    #[error("process `{process}` declares entity `{entity}` twice")]
    DuplicateEntity { process: String, entity: String },
    #[error("{0} cannot carry these location arguments")]
    InvalidLocations(ChangeKind),
    #[error("matrix is {got_steps}x{got_entities}, expected {steps}x{entities}")]
    DimensionMismatch {
        steps: usize,
        entities: usize,
        got_steps: usize,
        got_entities: usize,
    },
    #[error("matrix rows have unequal lengths")]
    RaggedMatrix,
    #[error("edge s_{src} -> s_{dst} is not forward-directed")]
    BackwardEdge { src: usize, dst: usize },
    #[error("edge s_{src} -> s_{dst} references a step outside 1..={steps}")]
    StepOutOfRange { src: usize, dst: usize, steps: usize },
    #[error("edge references undeclared entity `{0}`")]
    UnknownEntity(String),
    #[error("duplicate edge s_{src} -> s_{dst} for `{entity}`")]
    DuplicateEdge {
        src: usize,
        dst: usize,
        entity: String,
    },
    #[error("edge label for `{0}` has kind None")]
    NoneEdge(String),
    #[error("gold matrix violates existence constraints: {0:?}")]
    InvalidGoldMatrix(Vec<Violation>),
}

/// A participant entity and its alternative surface forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    name: String,
    aliases: Vec<String>,
}

impl Entity {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        Self::with_aliases(name, Vec::<String>::new())
    }

    /// The name is always the first alias; duplicates (after normalization)
    /// are dropped.
    pub fn with_aliases<I, S>(name: impl Into<String>, aliases: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into().trim().to_string();
        if name.is_empty() {
            return Err(ModelError::EmptyEntityName);
        }
        let mut all = vec![name.clone()];
        for a in aliases {
            let a = a.into().trim().to_string();
            if a.is_empty() {
                continue;
            }
            if !all.iter().any(|x| normalize(x) == normalize(&a)) {
                all.push(a);
            }
        }
        Ok(Entity { name, aliases: all })
    }

    /// Splits `"carbon dioxide;CO2"` into a name and its aliases.
    pub fn parse(spec: &str) -> Result<Self, ModelError> {
        let mut parts = spec.split(';');
        let name = parts.next().unwrap_or("");
        Self::with_aliases(name, parts)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn aliases(&self) -> &[String] {
        &self.aliases
    }

    pub fn key(&self) -> String {
        normalize(&self.name)
    }

    /// Inverse of [`Entity::parse`].
    pub fn to_spec(&self) -> String {
        self.aliases.join(";")
    }

    pub fn matches_name(&self, other: &str) -> bool {
        let other = normalize(other);
        self.aliases.iter().any(|a| normalize(a) == other)
    }
}

/// One `(step, entity)` cell that breaks the existence automaton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub step: usize,
    pub entity: String,
    pub state: ExistenceState,
    pub change: ChangeKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} entity `{}`: {} while {}",
            self.step, self.entity, self.change, self.state
        )
    }
}

/// `T x n` grid of state changes, indexed `[step][entity]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateChangeMatrix {
    rows: Vec<Vec<StateChange>>,
}

impl StateChangeMatrix {
    pub fn from_rows(rows: Vec<Vec<StateChange>>) -> Result<Self, ModelError> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(ModelError::RaggedMatrix);
            }
        }
        Ok(StateChangeMatrix { rows })
    }

    pub fn all_none(steps: usize, entities: usize) -> Self {
        StateChangeMatrix {
            rows: vec![vec![StateChange::none(); entities]; steps],
        }
    }

    pub fn from_kinds(rows: &[Vec<ChangeKind>]) -> Result<Self, ModelError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&k| StateChange::bare(k)).collect())
                .collect(),
        )
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    pub fn entities(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<StateChange>] {
        &self.rows
    }

    /// `step` is 1-based, `entity` a 0-based column.
    pub fn cell(&self, step: usize, entity: usize) -> &StateChange {
        &self.rows[step - 1][entity]
    }

    pub fn set(&mut self, step: usize, entity: usize, change: StateChange) {
        self.rows[step - 1][entity] = change;
    }

    pub fn column_kinds(&self, entity: usize) -> impl Iterator<Item = ChangeKind> + '_ {
        self.rows.iter().map(move |r| r[entity].kind())
    }

    /// Row-major kind codes; the decoder's tie-break compares these.
    pub fn kind_codes(&self) -> Vec<u8> {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|c| c.kind().index() as u8))
            .collect()
    }
}

/// Edge `s_src -> s_dst` explained by `change` on `entity`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DependencyEdge {
    src: usize,
    dst: usize,
    entity: String,
    change: StateChange,
}

impl DependencyEdge {
    pub fn new(
        src: usize,
        dst: usize,
        entity: impl Into<String>,
        change: StateChange,
    ) -> Result<Self, ModelError> {
        if src == 0 || src >= dst {
            return Err(ModelError::BackwardEdge { src, dst });
        }
        let entity = entity.into();
        if change.is_none() {
            return Err(ModelError::NoneEdge(entity));
        }
        Ok(DependencyEdge {
            src,
            dst,
            entity,
            change,
        })
    }

    pub fn src(&self) -> usize {
        self.src
    }

    pub fn dst(&self) -> usize {
        self.dst
    }

    pub fn entity(&self) -> &str {
        &self.entity
    }

    pub fn change(&self) -> &StateChange {
        &self.change
    }

    fn sort_key(&self) -> (usize, usize, String) {
        (self.src, self.dst, normalize(&self.entity))
    }
}

impl PartialOrd for DependencyEdge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DependencyEdge {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key()
            .cmp(&other.sort_key())
            .then_with(|| self.entity.cmp(&other.entity))
            .then_with(|| self.change.cmp(&other.change))
    }
}

/// Forward-directed dependency graph; edges kept sorted by
/// `(src, dst, entity)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DependencyGraph {
    edges: Vec<DependencyEdge>,
}

impl DependencyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I: IntoIterator<Item = DependencyEdge>>(edges: I) -> Result<Self, ModelError> {
        let mut g = DependencyGraph::new();
        for e in edges {
            g.insert(e)?;
        }
        Ok(g)
    }

    /// Rejects a second edge on the same `(src, dst, entity)` triple.
    pub fn insert(&mut self, edge: DependencyEdge) -> Result<(), ModelError> {
        let key = edge.sort_key();
        match self.edges.binary_search_by(|e| e.sort_key().cmp(&key)) {
            Ok(_) => Err(ModelError::DuplicateEdge {
                src: edge.src,
                dst: edge.dst,
                entity: edge.entity,
            }),
            Err(pos) => {
                self.edges.insert(pos, edge);
                Ok(())
            }
        }
    }

    pub fn edges(&self) -> &[DependencyEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// One procedural paragraph with its participants and optional gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessRecord {
    id: String,
    topic: String,
    steps: Vec<String>,
    entities: Vec<Entity>,
    gold_matrix: Option<StateChangeMatrix>,
    gold_graph: Option<DependencyGraph>,
}

impl ProcessRecord {
    pub fn new(
        id: impl Into<String>,
        topic: impl Into<String>,
        steps: Vec<String>,
        entities: Vec<Entity>,
    ) -> Result<Self, ModelError> {
        let id = id.into();
        if steps.is_empty() {
            return Err(ModelError::NoSteps(id));
        }
        if entities.is_empty() {
            return Err(ModelError::NoEntities(id));
        }
        for (i, e) in entities.iter().enumerate() {
            if entities[..i].iter().any(|p| p.key() == e.key()) {
                return Err(ModelError::DuplicateEntity {
                    process: id,
                    entity: e.name().to_string(),
                });
            }
        }
        Ok(ProcessRecord {
            id,
            topic: topic.into(),
            steps,
            entities,
            gold_matrix: None,
            gold_graph: None,
        })
    }

    pub fn with_gold_matrix(mut self, matrix: StateChangeMatrix) -> Result<Self, ModelError> {
        let violations = validate_matrix(&self, &matrix)?;
        if !violations.is_empty() {
            return Err(ModelError::InvalidGoldMatrix(violations));
        }
        self.gold_matrix = Some(matrix);
        Ok(self)
    }

    pub fn with_gold_graph(mut self, graph: DependencyGraph) -> Result<Self, ModelError> {
        self.check_graph(&graph)?;
        self.gold_graph = Some(graph);
        Ok(self)
    }

    /// Every edge stays inside `1..=T` and names a declared entity.
    pub fn check_graph(&self, graph: &DependencyGraph) -> Result<(), ModelError> {
        for e in graph.edges() {
            if e.dst() > self.num_steps() {
                return Err(ModelError::StepOutOfRange {
                    src: e.src(),
                    dst: e.dst(),
                    steps: self.num_steps(),
                });
            }
            if self.entity_index(e.entity()).is_none() {
                return Err(ModelError::UnknownEntity(e.entity().to_string()));
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn steps(&self) -> &[String] {
        &self.steps
    }

    /// 1-based.
    pub fn step(&self, t: usize) -> &str {
        &self.steps[t - 1]
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Column of the entity whose name or alias matches `name`.
    pub fn entity_index(&self, name: &str) -> Option<usize> {
        let key = normalize(name);
        self.entities
            .iter()
            .position(|e| e.key() == key)
            .or_else(|| self.entities.iter().position(|e| e.matches_name(name)))
    }

    pub fn gold_matrix(&self) -> Option<&StateChangeMatrix> {
        self.gold_matrix.as_ref()
    }

    pub fn gold_graph(&self) -> Option<&DependencyGraph> {
        self.gold_graph.as_ref()
    }

    pub fn without_gold(&self) -> ProcessRecord {
        ProcessRecord {
            gold_matrix: None,
            gold_graph: None,
            ..self.clone()
        }
    }
}

/// Folds every entity column through [`apply_change`] from `Unknown`.
///
/// Folding continues past a violation with the state unchanged so a single
/// call reports every offending cell.
pub fn validate_matrix(
    process: &ProcessRecord,
    matrix: &StateChangeMatrix,
) -> Result<Vec<Violation>, ModelError> {
    if matrix.steps() != process.num_steps() || matrix.entities() != process.num_entities() {
        return Err(ModelError::DimensionMismatch {
            steps: process.num_steps(),
            entities: process.num_entities(),
            got_steps: matrix.steps(),
            got_entities: matrix.entities(),
        });
    }
    let mut out = Vec::new();
    for (j, entity) in process.entities().iter().enumerate() {
        let mut state = ExistenceState::Unknown;
        for (t, kind) in matrix.column_kinds(j).enumerate() {
            match apply_change(state, kind) {
                Ok(next) => state = next,
                Err(e) => out.push(Violation {
                    step: t + 1,
                    entity: entity.name().to_string(),
                    state: e.state,
                    change: e.change,
                }),
            }
        }
    }
    Ok(out)
}
