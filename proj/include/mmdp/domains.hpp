#pragma once

#include "mmdp/mdp.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mmdp {

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
    auto operator<=>(const Cell&) const = default;
};

/// Actions: 0 up (y-1), 1 down (y+1), 2 left (x-1), 3 right (x+1).
struct GridSpec {
    int width = 0;
    int height = 0;
    std::vector<Cell> walls;
    Cell goal;
    double slip = 0.9; ///< success probability
    double step_reward = 0.0;
    double goal_reward = 10.0;
    double gamma = 0.95;

    void validate() const;
};

struct Gridworld {
    Mdp mdp;
    int width = 0;
    int height = 0;
    std::vector<Cell> cells; ///< state -> cell, row-major over free cells
    std::vector<int> index;  ///< y*width + x -> state, -1 for walls
    int goal_state = -1;
    bool goal_reachable = true;

    int state_of(Cell c) const;
};

Gridworld build_gridworld(const GridSpec& spec);

/// Rows of `#` wall, `.` free, `G` goal.
GridSpec parse_grid_map(const std::string& text);
std::string grid_map(const GridSpec& spec);

/// 12x12 world with four rooms joined by single-cell doorways; goal in the bottom-right room.
GridSpec four_room();
/// Cells of the four doorways of four_room().
std::vector<Cell> four_room_doorways();

/// Random walls at density `wall_fraction`; cells cut off from the goal become walls.
GridSpec random_gridworld(int width, int height, double wall_fraction, std::uint64_t seed);

/// 20x20 four-room world and its left-right mirror image (walls and goal reflected).
/// With `identity`, both elements are the source world.
std::pair<GridSpec, GridSpec> mirrored_gridworld_pair(bool identity = false);

enum class PlayroomVariant { default_, transfer, partial_default, partial_transfer };

PlayroomVariant parse_playroom_variant(const std::string& s);
std::string playroom_variant_name(PlayroomVariant v);

struct PlayroomSpec {
    PlayroomVariant variant = PlayroomVariant::default_;
    double success = 0.75;
    double gamma = 0.96;
};

enum PlayObject { ball = 0, bell = 1, music = 2, light = 3 };

/// Actions: 0 look at a random object, 1 place marker on the looked-at object,
/// 2 press the music button, 3 kick the ball, 4 flip the light switch.
struct PlayroomState {
    int look = 0;
    int marker = 0;
    bool music = false;
    bool bell = false;
    bool light = false;

    int code() const;
    bool operator==(const PlayroomState&) const = default;
};

struct Playroom {
    Mdp mdp;
    std::vector<PlayroomState> states;
    int state_of(const PlayroomState& s) const; ///< -1 when not in the reachable set
};

Playroom build_playroom(const PlayroomSpec& spec);

/// Successor distribution of one playroom action, ignoring goal termination.
std::vector<std::pair<PlayroomState, double>> playroom_step(const PlayroomSpec& spec, const PlayroomState& s, int a);
bool playroom_goal(PlayroomVariant v, const PlayroomState& s);

} // namespace mmdp
