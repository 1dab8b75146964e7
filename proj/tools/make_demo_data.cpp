// Writes the synthetic demo inputs: base_tools.json, seeds.jsonl, corpus.jsonl.
//   make_demo_data <out-dir> [seed-count] [corpus-facts] [world-seed]

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "demo_world.hpp"

int main(int argc, char** argv)
{
    if (argc < 2 || argv[1][0] == '-') {
        std::cerr << "usage: make_demo_data <out-dir> [seed-count] [corpus-facts] [world-seed]\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const std::size_t seeds = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 60;
    const std::size_t facts = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 120;
    const std::uint64_t world_seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 7;
    std::filesystem::create_directories(dir);

    const auto world = demo::make_world(seeds, facts, world_seed);
    std::ofstream(dir / "base_tools.json") << toolforge::tools_to_json(world.tools).dump(2) << '\n';
    std::ofstream s(dir / "seeds.jsonl");
    for (const auto& seed : world.seeds) s << toolforge::seed_to_json(seed).dump() << '\n';
    std::ofstream c(dir / "corpus.jsonl");
    for (const auto& d : world.corpus) c << nlohmann::json{{"id", d.id}, {"title", d.title}, {"text", d.body}}.dump() << '\n';
    std::cout << world.seeds.size() << " seeds, " << world.corpus.size() << " corpus documents, " << world.tools.size()
              << " base tools in " << dir.string() << '\n';
    return 0;
}
