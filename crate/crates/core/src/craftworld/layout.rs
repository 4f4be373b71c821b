use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CraftError;
use crate::util::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terrain {
    Floor,
    Wall,
    Water,
}

impl Terrain {
    pub fn symbol(self) -> char {
        match self {
            Terrain::Floor => '.',
            Terrain::Wall => '#',
            Terrain::Water => '~',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '.' => Some(Terrain::Floor),
            '#' => Some(Terrain::Wall),
            '~' => Some(Terrain::Water),
            _ => None,
        }
    }

    pub fn is_passable(self) -> bool {
        self == Terrain::Floor
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub kind: String,
    pub x: i32,
    pub y: i32,
}

impl Placement {
    pub fn cell(&self) -> Cell {
        Cell::new(self.x, self.y)
    }
}

/// Static description of one environment instance.
///
/// On disk the terrain is a list of row strings using `.` (floor), `#` (wall)
/// and `~` (water), top row first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub agent_start: Cell,
    #[serde(serialize_with = "terrain_to_rows", deserialize_with = "terrain_from_rows")]
    pub terrain: Vec<Vec<Terrain>>,
    pub entities: Vec<Placement>,
}

fn terrain_to_rows<S: Serializer>(rows: &[Vec<Terrain>], s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<String> = rows.iter().map(|r| r.iter().map(|t| t.symbol()).collect()).collect();
    rows.serialize(s)
}

fn terrain_from_rows<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Terrain>>, D::Error> {
    let rows = Vec::<String>::deserialize(d)?;
    rows.iter()
        .map(|r| {
            r.chars()
                .map(|c| {
                    Terrain::from_symbol(c)
                        .ok_or_else(|| serde::de::Error::custom(format!("unknown terrain symbol `{c}`")))
                })
                .collect()
        })
        .collect()
}

impl Layout {
    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn terrain_at(&self, c: Cell) -> Option<Terrain> {
        if self.in_bounds(c) {
            Some(self.terrain[c.y as usize][c.x as usize])
        } else {
            None
        }
    }

    pub fn is_floor(&self, c: Cell) -> bool {
        self.terrain_at(c) == Some(Terrain::Floor)
    }

    /// Checks the structural invariants: grid shape, entities on distinct floor
    /// cells, agent start on floor.
    pub fn validate(&self) -> Result<(), CraftError> {
        if self.width == 0 || self.height == 0 {
            return Err(CraftError::InvalidLayout("empty grid".into()));
        }
        if self.terrain.len() != self.height || self.terrain.iter().any(|r| r.len() != self.width) {
            return Err(CraftError::InvalidLayout(format!(
                "terrain must be {} rows of {} cells",
                self.height, self.width
            )));
        }
        if !self.is_floor(self.agent_start) {
            return Err(CraftError::InvalidLayout("agent start is not a floor cell".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.entities {
            if !self.is_floor(p.cell()) {
                return Err(CraftError::InvalidLayout(format!(
                    "entity `{}` at ({}, {}) is not on floor",
                    p.kind, p.x, p.y
                )));
            }
            if !seen.insert(p.cell()) {
                return Err(CraftError::InvalidLayout(format!("two entities share cell ({}, {})", p.x, p.y)));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("layout serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, CraftError> {
        let layout: Layout = toml::from_str(text).map_err(|e| CraftError::Format(e.to_string()))?;
        layout.validate()?;
        Ok(layout)
    }

    /// ASCII rendering with entity initials over the terrain and `@` for the agent start.
    pub fn render(&self) -> String {
        let mut grid: Vec<Vec<char>> = self.terrain.iter().map(|r| r.iter().map(|t| t.symbol()).collect()).collect();
        for p in &self.entities {
            grid[p.y as usize][p.x as usize] = p.kind.chars().next().unwrap_or('?');
        }
        grid[self.agent_start.y as usize][self.agent_start.x as usize] = '@';
        grid.into_iter().map(|r| r.into_iter().collect::<String>()).collect::<Vec<_>>().join("\n")
    }
}

/// Parameters of the procedural layout generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationParams {
    pub width: usize,
    pub height: usize,
    /// Fraction of cells turned into walls.
    #[serde(default)]
    pub wall_fraction: f64,
    /// Fraction of cells turned into water.
    #[serde(default)]
    pub water_fraction: f64,
    /// Entity kinds the generator knows how to place.
    pub palette: Vec<String>,
    /// Minimum number of instances per entity kind.
    #[serde(default)]
    pub required: BTreeMap<String, u32>,
    /// Additional instances drawn uniformly from the palette.
    #[serde(default)]
    pub extra_entities: u32,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_retries() -> u32 {
    64
}

impl GenerationParams {
    pub fn new(width: usize, height: usize, palette: Vec<String>) -> Self {
        Self {
            width,
            height,
            wall_fraction: 0.0,
            water_fraction: 0.0,
            palette,
            required: BTreeMap::new(),
            extra_entities: 0,
            max_retries: default_retries(),
        }
    }
}

/// Generates a layout as a pure function of `(seed, params)`.
pub fn generate_layout(seed: u64, params: &GenerationParams) -> Result<Layout, CraftError> {
    for kind in params.required.keys() {
        if !params.palette.contains(kind) {
            return Err(CraftError::NotInPalette(kind.clone()));
        }
    }
    if params.extra_entities > 0 && params.palette.is_empty() {
        return Err(CraftError::GenerationFailed { attempts: 0, reason: "empty palette".into() });
    }
    if params.width == 0 || params.height == 0 {
        return Err(CraftError::GenerationFailed { attempts: 0, reason: "empty grid".into() });
    }
    let mut rng = rng_from(seed);
    let cells = params.width * params.height;
    let n_walls = (params.wall_fraction.clamp(0.0, 1.0) * cells as f64).round() as usize;
    let n_water = (params.water_fraction.clamp(0.0, 1.0) * cells as f64).round() as usize;
    let n_required: usize = params.required.values().map(|&n| n as usize).sum();
    let n_entities = n_required + params.extra_entities as usize;

    let mut last_reason = String::new();
    let attempts = params.max_retries.max(1);
    for _ in 0..attempts {
        let mut terrain = vec![vec![Terrain::Floor; params.width]; params.height];
        let mut all: Vec<Cell> =
            (0..params.height as i32).flat_map(|y| (0..params.width as i32).map(move |x| Cell::new(x, y))).collect();
        all.shuffle(&mut rng);
        for (i, c) in all.iter().take(n_walls + n_water).enumerate() {
            terrain[c.y as usize][c.x as usize] = if i < n_walls { Terrain::Wall } else { Terrain::Water };
        }
        let mut floor: Vec<Cell> =
            all.iter().copied().filter(|c| terrain[c.y as usize][c.x as usize] == Terrain::Floor).collect();
        if floor.len() < n_entities + 1 {
            last_reason = format!("{} floor cells for {} entities and the agent", floor.len(), n_entities);
            continue;
        }
        if !floor_connected(&terrain, params.width, params.height) {
            last_reason = "floor is not connected".into();
            continue;
        }
        floor.shuffle(&mut rng);
        let agent_start = floor[0];
        let mut entities = Vec::with_capacity(n_entities);
        let mut free = floor[1..].iter();
        for (kind, &count) in &params.required {
            for _ in 0..count {
                let c = free.next().expect("counted above");
                entities.push(Placement { kind: kind.clone(), x: c.x, y: c.y });
            }
        }
        for _ in 0..params.extra_entities {
            let kind = &params.palette[rng.gen_range(0..params.palette.len())];
            let c = free.next().expect("counted above");
            entities.push(Placement { kind: kind.clone(), x: c.x, y: c.y });
        }
        let layout = Layout { width: params.width, height: params.height, seed, agent_start, terrain, entities };
        debug_assert!(layout.validate().is_ok());
        return Ok(layout);
    }
    Err(CraftError::GenerationFailed { attempts, reason: last_reason })
}

fn floor_connected(terrain: &[Vec<Terrain>], width: usize, height: usize) -> bool {
    let floor: Vec<(usize, usize)> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .filter(|&(x, y)| terrain[y][x] == Terrain::Floor)
        .collect();
    let Some(&start) = floor.first() else { return false };
    let mut seen = vec![vec![false; width]; height];
    let mut queue = VecDeque::from([start]);
    seen[start.1][start.0] = true;
    let mut count = 0;
    while let Some((x, y)) = queue.pop_front() {
        count += 1;
        let neighbours = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
        for (nx, ny) in neighbours {
            if nx < width && ny < height && !seen[ny][nx] && terrain[ny][nx] == Terrain::Floor {
                seen[ny][nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    count == floor.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GenerationParams {
        let mut p = GenerationParams::new(6, 6, vec!["tree".into(), "stone".into(), "furnace".into()]);
        p.required.insert("tree".into(), 1);
        p.required.insert("stone".into(), 2);
        p.required.insert("furnace".into(), 1);
        p
    }

    #[test]
    fn same_seed_same_layout() {
        assert_eq!(generate_layout(7, &params()).unwrap(), generate_layout(7, &params()).unwrap());
    }

    #[test]
    fn neighbouring_seeds_differ() {
        let p = params();
        let differing = (0..100u64)
            .filter(|&s| generate_layout(s, &p).unwrap().entities != generate_layout(s + 1, &p).unwrap().entities)
            .count();
        assert!(differing >= 99, "{differing}");
    }

    #[test]
    fn kind_outside_palette_is_rejected() {
        let mut p = params();
        p.required.insert("diamond".into(), 1);
        assert_eq!(generate_layout(1, &p), Err(CraftError::NotInPalette("diamond".into())));
    }

    #[test]
    fn overfull_grid_fails_after_retries() {
        let mut p = params();
        p.required.insert("tree".into(), 40);
        p.max_retries = 3;
        assert!(matches!(generate_layout(1, &p), Err(CraftError::GenerationFailed { attempts: 3, .. })));
    }

    #[test]
    fn obstacles_keep_floor_connected() {
        let mut p = params();
        p.wall_fraction = 0.15;
        p.water_fraction = 0.1;
        for seed in 0..50 {
            let l = generate_layout(seed, &p).unwrap();
            l.validate().unwrap();
            assert!(floor_connected(&l.terrain, l.width, l.height));
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut p = params();
        p.wall_fraction = 0.1;
        let l = generate_layout(3, &p).unwrap();
        let text = l.to_toml();
        assert!(text.contains("terrain"));
        assert_eq!(Layout::from_toml(&text).unwrap(), l);
        let pt = toml::to_string(&p).unwrap();
        assert_eq!(toml::from_str::<GenerationParams>(&pt).unwrap(), p);
    }

    #[test]
    fn unknown_fields_and_bad_layouts_are_rejected() {
        let l = generate_layout(3, &params()).unwrap();
        let text = l.to_toml() + "\nbogus = 1\n";
        assert!(Layout::from_toml(&text).is_err());
        let mut bad = l.clone();
        bad.entities.push(Placement { kind: "tree".into(), x: bad.entities[0].x, y: bad.entities[0].y });
        assert!(Layout::from_toml(&bad.to_toml()).is_err());
    }
}
