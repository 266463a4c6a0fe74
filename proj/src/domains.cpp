#include "mmdp/domains.hpp"

#include "mmdp/error.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace mmdp {

void GridSpec::validate() const {
    if (width < 1 || height < 1) throw InvalidInput("grid: width and height must be positive");
    if (!(slip > 0.0 && slip <= 1.0)) throw InvalidInput("grid: slip must lie in (0,1]");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("grid: gamma must lie in (0,1)");
    auto inside = [&](Cell c) { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; };
    if (!inside(goal)) throw InvalidInput("grid: goal outside the world");
    for (Cell w : walls) {
        if (!inside(w)) throw InvalidInput("grid: wall outside the world");
        if (w == goal) throw InvalidInput("grid: goal is a wall");
    }
}

int Gridworld::state_of(Cell c) const {
    if (c.x < 0 || c.x >= width || c.y < 0 || c.y >= height) return -1;
    return index[c.y * width + c.x];
}

namespace {

constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {-1, 1, 0, 0};

std::vector<bool> wall_mask(const GridSpec& spec) {
    std::vector<bool> wall(static_cast<std::size_t>(spec.width) * spec.height, false);
    for (Cell w : spec.walls) wall[w.y * spec.width + w.x] = true;
    return wall;
}

/// Free cells from which the goal is reachable by moves.
std::vector<bool> reaches_goal(const GridSpec& spec, const std::vector<bool>& wall) {
    std::vector<bool> seen(wall.size(), false);
    std::deque<Cell> q{spec.goal};
    seen[spec.goal.y * spec.width + spec.goal.x] = true;
    while (!q.empty()) {
        Cell c = q.front();
        q.pop_front();
        for (int a = 0; a < 4; ++a) {
            Cell n{c.x + kDx[a], c.y + kDy[a]};
            if (n.x < 0 || n.x >= spec.width || n.y < 0 || n.y >= spec.height) continue;
            int k = n.y * spec.width + n.x;
            if (wall[k] || seen[k]) continue;
            seen[k] = true;
            q.push_back(n);
        }
    }
    return seen;
}

} // namespace

Gridworld build_gridworld(const GridSpec& spec) {
    spec.validate();
    Gridworld g;
    g.width = spec.width;
    g.height = spec.height;
    std::vector<bool> wall = wall_mask(spec);
    g.index.assign(wall.size(), -1);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            if (!wall[y * spec.width + x]) {
                g.index[y * spec.width + x] = static_cast<int>(g.cells.size());
                g.cells.push_back({x, y});
            }
    const int n = static_cast<int>(g.cells.size());
    g.goal_state = g.state_of(spec.goal);

    std::vector<Transition> tr;
    std::vector<std::vector<int>> feasible(n, {0, 1, 2, 3});
    std::vector<bool> terminal(n, false);
    terminal[g.goal_state] = true;
    std::vector<std::string> labels;
    for (int s = 0; s < n; ++s) {
        Cell c = g.cells[s];
        labels.push_back(std::to_string(c.x) + "," + std::to_string(c.y));
        for (int a = 0; a < 4; ++a) {
            if (s == g.goal_state) {
                tr.push_back({s, a, s, 1.0, 0.0, spec.gamma});
                continue;
            }
            int t = g.state_of({c.x + kDx[a], c.y + kDy[a]});
            if (t < 0) {
                tr.push_back({s, a, s, 1.0, spec.step_reward, spec.gamma});
                continue;
            }
            tr.push_back({s, a, t, spec.slip, t == g.goal_state ? spec.goal_reward : spec.step_reward, spec.gamma});
            if (spec.slip < 1.0) tr.push_back({s, a, s, 1.0 - spec.slip, spec.step_reward, spec.gamma});
        }
    }
    g.mdp = Mdp(n, 4, std::move(tr), std::move(feasible), std::move(terminal)).with_labels(std::move(labels));
    std::vector<bool> ok = reaches_goal(spec, wall);
    for (Cell c : g.cells)
        if (!ok[c.y * spec.width + c.x]) g.goal_reachable = false;
    return g;
}

GridSpec parse_grid_map(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(line);
    }
    if (rows.empty()) throw ParseError("grid map: no rows");
    GridSpec spec;
    spec.width = static_cast<int>(rows[0].size());
    spec.height = static_cast<int>(rows.size());
    bool has_goal = false;
    for (int y = 0; y < spec.height; ++y) {
        if (static_cast<int>(rows[y].size()) != spec.width)
            throw ParseError("grid map: line " + std::to_string(y + 1) + " has length " +
                             std::to_string(rows[y].size()) + ", expected " + std::to_string(spec.width));
        for (int x = 0; x < spec.width; ++x) {
            char ch = rows[y][x];
            if (ch == '#') {
                spec.walls.push_back({x, y});
            } else if (ch == 'G') {
                if (has_goal) throw ParseError("grid map: line " + std::to_string(y + 1) + ": second goal");
                spec.goal = {x, y};
                has_goal = true;
            } else if (ch != '.') {
                throw ParseError("grid map: line " + std::to_string(y + 1) + ": unexpected character '" +
                                 std::string(1, ch) + "'");
            }
        }
    }
    if (!has_goal) throw ParseError("grid map: missing goal 'G'");
    return spec;
}

std::string grid_map(const GridSpec& spec) {
    std::vector<std::string> rows(spec.height, std::string(spec.width, '.'));
    for (Cell w : spec.walls) rows[w.y][w.x] = '#';
    rows[spec.goal.y][spec.goal.x] = 'G';
    std::string out;
    for (const auto& r : rows) out += r + "\n";
    return out;
}

std::vector<Cell> four_room_doorways() { return {{6, 2}, {6, 9}, {2, 6}, {9, 6}}; }

GridSpec four_room() {
    GridSpec spec;
    spec.width = 12;
    spec.height = 12;
    std::vector<Cell> doors = four_room_doorways();
    auto is_door = [&](Cell c) { return std::find(doors.begin(), doors.end(), c) != doors.end(); };
    for (int i = 0; i < 12; ++i) {
        Cell v{6, i}, hz{i, 6};
        if (!is_door(v)) spec.walls.push_back(v);
        if (i != 6 && !is_door(hz)) spec.walls.push_back(hz);
    }
    std::sort(spec.walls.begin(), spec.walls.end());
    spec.goal = {11, 11};
    return spec;
}

GridSpec random_gridworld(int width, int height, double wall_fraction, std::uint64_t seed) {
    if (!(wall_fraction >= 0.0 && wall_fraction < 1.0)) throw InvalidInput("random_gridworld: bad wall fraction");
    GridSpec spec;
    spec.width = width;
    spec.height = height;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> ux(0, width - 1), uy(0, height - 1);
    spec.goal = {ux(rng), uy(rng)};
    std::vector<int> cells;
    for (int k = 0; k < width * height; ++k)
        if (k != spec.goal.y * width + spec.goal.x) cells.push_back(k);
    std::shuffle(cells.begin(), cells.end(), rng);
    const auto n_walls = static_cast<std::size_t>(wall_fraction * width * height + 0.5);
    std::vector<bool> wall(static_cast<std::size_t>(width) * height, false);
    for (std::size_t k = 0; k < std::min(n_walls, cells.size()); ++k) wall[cells[k]] = true;
    spec.walls.clear();
    for (int k = 0; k < width * height; ++k)
        if (wall[k]) spec.walls.push_back({k % width, k / width});
    std::vector<bool> ok = reaches_goal(spec, wall);
    spec.walls.clear();
    for (int k = 0; k < width * height; ++k)
        if (wall[k] || !ok[k]) spec.walls.push_back({k % width, k / width});
    std::sort(spec.walls.begin(), spec.walls.end());
    return spec;
}

std::pair<GridSpec, GridSpec> mirrored_gridworld_pair(bool identity) {
    GridSpec src;
    src.width = 20;
    src.height = 20;
    std::set<Cell> doors = {{3, 6}, {13, 6}, {14, 6}, {7, 2}, {7, 14}, {7, 15}};
    std::set<Cell> walls;
    for (int i = 0; i < 20; ++i) {
        Cell v{7, i}, hz{i, 6};
        if (!doors.count(v)) walls.insert(v);
        if (!doors.count(hz)) walls.insert(hz);
    }
    src.walls.assign(walls.begin(), walls.end());
    src.goal = {0, 10};
    if (identity) return {src, src};
    GridSpec dst = src;
    for (auto& w : dst.walls) w.x = 19 - w.x;
    std::sort(dst.walls.begin(), dst.walls.end());
    dst.goal.x = 19 - src.goal.x;
    return {src, dst};
}

// ---------------------------------------------------------------------------

PlayroomVariant parse_playroom_variant(const std::string& s) {
    if (s == "default") return PlayroomVariant::default_;
    if (s == "transfer") return PlayroomVariant::transfer;
    if (s == "partial-default") return PlayroomVariant::partial_default;
    if (s == "partial-transfer") return PlayroomVariant::partial_transfer;
    throw InvalidInput("unknown playroom variant '" + s + "'");
}

std::string playroom_variant_name(PlayroomVariant v) {
    switch (v) {
    case PlayroomVariant::default_: return "default";
    case PlayroomVariant::transfer: return "transfer";
    case PlayroomVariant::partial_default: return "partial-default";
    case PlayroomVariant::partial_transfer: return "partial-transfer";
    }
    return "?";
}

int PlayroomState::code() const { return (((look * 4 + marker) * 2 + music) * 2 + bell) * 2 + light; }

int Playroom::state_of(const PlayroomState& s) const {
    auto it = std::find(states.begin(), states.end(), s);
    return it == states.end() ? -1 : static_cast<int>(it - states.begin());
}

bool playroom_goal(PlayroomVariant v, const PlayroomState& s) {
    bool light_goal = v == PlayroomVariant::transfer || v == PlayroomVariant::partial_transfer;
    return s.music && (light_goal ? s.light : s.bell);
}

std::vector<std::pair<PlayroomState, double>> playroom_step(const PlayroomSpec& spec, const PlayroomState& s, int a) {
    PlayroomState base = s;
    base.bell = false;
    base.light = false;
    std::vector<std::pair<PlayroomState, double>> out;
    auto attempt = [&](bool ok, PlayroomState next) {
        if (!ok) {
            out.push_back({base, 1.0});
            return;
        }
        out.push_back({next, spec.success});
        if (spec.success < 1.0) out.push_back({base, 1.0 - spec.success});
    };
    const bool partial = spec.variant == PlayroomVariant::partial_default ||
                         spec.variant == PlayroomVariant::partial_transfer;
    PlayroomState next = base;
    switch (a) {
    case 0:
        for (int o = 0; o < 4; ++o) {
            next.look = o;
            out.push_back({next, 0.25});
        }
        break;
    case 1:
        next.marker = s.look;
        attempt(true, next);
        break;
    case 2:
        next.music = !s.music;
        attempt(s.look == music, next);
        break;
    case 3:
        next.bell = true;
        attempt(s.look == ball && s.marker == bell, next);
        break;
    case 4:
        next.light = true;
        attempt(partial ? (s.look == light && s.marker == bell) : (s.look == ball && s.marker == bell), next);
        break;
    default: throw InvalidInput("playroom: action out of range");
    }
    // Merge duplicate successors (e.g. a failed attempt equal to the success state).
    std::vector<std::pair<PlayroomState, double>> merged;
    for (const auto& [st, p] : out) {
        auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& e) { return e.first == st; });
        if (it == merged.end())
            merged.push_back({st, p});
        else
            it->second += p;
    }
    return merged;
}

Playroom build_playroom(const PlayroomSpec& spec) {
    if (!(spec.success > 0.0 && spec.success <= 1.0)) throw InvalidInput("playroom: success must lie in (0,1]");
    if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw InvalidInput("playroom: gamma must lie in (0,1)");
    std::map<int, PlayroomState> seen;
    std::deque<PlayroomState> q;
    for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 4; ++m) {
            PlayroomState s{l, m, false, false, false};
            seen[s.code()] = s;
            q.push_back(s);
        }
    while (!q.empty()) {
        PlayroomState s = q.front();
        q.pop_front();
        if (playroom_goal(spec.variant, s)) continue;
        for (int a = 0; a < 5; ++a)
            for (const auto& [n, p] : playroom_step(spec, s, a))
                if (!seen.count(n.code())) {
                    seen[n.code()] = n;
                    q.push_back(n);
                }
    }
    Playroom room;
    std::map<int, int> id;
    for (const auto& [code, st] : seen) {
        id[code] = static_cast<int>(room.states.size());
        room.states.push_back(st);
    }
    const int n = static_cast<int>(room.states.size());
    std::vector<Transition> tr;
    std::vector<bool> terminal(n, false);
    std::vector<std::string> labels;
    for (int s = 0; s < n; ++s) {
        const PlayroomState& st = room.states[s];
        labels.push_back("look=" + std::to_string(st.look) + ",marker=" + std::to_string(st.marker) +
                         ",music=" + std::to_string(st.music) + ",bell=" + std::to_string(st.bell) +
                         ",light=" + std::to_string(st.light));
        if (playroom_goal(spec.variant, st)) {
            terminal[s] = true;
            for (int a = 0; a < 5; ++a) tr.push_back({s, a, s, 1.0, 0.0, spec.gamma});
            continue;
        }
        for (int a = 0; a < 5; ++a)
            for (const auto& [nx, p] : playroom_step(spec, st, a)) {
                double r = playroom_goal(spec.variant, nx) ? 10.0 : -1.0;
                tr.push_back({s, a, id.at(nx.code()), p, r, spec.gamma});
            }
    }
    room.mdp = Mdp(n, 5, std::move(tr), std::vector<std::vector<int>>(n, {0, 1, 2, 3, 4}), std::move(terminal))
                   .with_labels(std::move(labels));
    return room;
}

} // namespace mmdp
