#pragma once

// A demo world wired for synthesis: 19 base tools, seeds, distractor corpus plus gold passages,
// the default catalog and the simulated backend. Members point at each other, so it stays put.

#include "demo_world.hpp"
#include "toolforge/toolforge.hpp"

struct World {
    explicit World(std::size_t seed_count, std::uint64_t run_seed = 1)
        : world(demo::make_world(seed_count)),
          toolset(toolforge::build_tool_set(world.tools, backend, {})),
          index(toolforge::build_index(documents(world))),
          shortlister(toolset.tools),
          catalog(toolforge::default_catalog()),
          registry(world.seeds)
    {
        ctx = {&toolset, &shortlister, &catalog, &index, 5, {}, run_seed};
        vctx = {&toolset, &catalog, &registry};
    }

    World(const World&) = delete;
    World& operator=(const World&) = delete;

    static std::vector<toolforge::Document> documents(const demo::World& w)
    {
        auto docs = w.corpus;
        for (auto& d : toolforge::gold_documents(w.seeds)) docs.push_back(d);
        return docs;
    }

    const toolforge::SeedTriple& seed(std::size_t i) const { return world.seeds.at(i); }
    const toolforge::InteractionPattern& pattern(std::string_view id) const { return *toolforge::find_pattern(catalog, id); }

    toolforge::Sample synthesize(std::size_t seed_index, const toolforge::InteractionPattern& p) const
    {
        return toolforge::synthesize(seed(seed_index), p, ctx, backend, 0);
    }

    demo::World world;
    toolforge::SimulatedBackend backend;
    toolforge::ToolSet toolset;
    toolforge::CorpusIndex index;
    toolforge::ToolShortlister shortlister;
    std::vector<toolforge::InteractionPattern> catalog;
    toolforge::SeedRegistry registry;
    toolforge::SynthesisContext ctx;
    toolforge::ValidationContext vctx;
};
