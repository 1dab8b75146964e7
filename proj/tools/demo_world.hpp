#pragma once

// Synthetic multi-hop QA world: fictional entities, seed triples whose golden passages chain
// through them, a distractor corpus in the same style, and one retrieval tool per domain.

#include <array>
#include <set>
#include <string>
#include <vector>

#include "toolforge/corpus.hpp"
#include "toolforge/hash.hpp"
#include "toolforge/sample.hpp"
#include "toolforge/tool_space.hpp"

namespace demo {

using toolforge::Rng;

struct Domain {
    const char* name;
    const char* topics;
};

inline constexpr std::array<Domain, 19> kDomains = {{
    {"film", "films, directors, premieres and release years"},
    {"music", "composers, operas, bands and recordings"},
    {"literature", "novels, authors, poets and literary prizes"},
    {"sports", "clubs, athletes, stadiums and championships"},
    {"geography", "cities, rivers, regions and countries"},
    {"history", "treaties, dynasties, battles and historical figures"},
    {"science", "scientists, discoveries and research institutes"},
    {"politics", "politicians, parties, elections and offices"},
    {"business", "companies, founders, headquarters and industries"},
    {"art", "painters, sculptures, museums and art movements"},
    {"architecture", "buildings, architects, bridges and landmarks"},
    {"medicine", "physicians, hospitals, diseases and treatments"},
    {"technology", "inventions, engineers, software and devices"},
    {"religion", "temples, monasteries, saints and traditions"},
    {"military", "generals, regiments, fortresses and campaigns"},
    {"education", "universities, colleges, professors and degrees"},
    {"transport", "railways, airports, ports and shipping lines"},
    {"food", "dishes, chefs, restaurants and culinary regions"},
    {"astronomy", "observatories, astronomers, comets and telescopes"},
}};

inline std::vector<toolforge::VirtualTool> base_tools()
{
    using toolforge::ParamKind;
    using toolforge::ParamRole;
    std::vector<toolforge::VirtualTool> out;
    for (std::size_t i = 0; i < kDomains.size(); ++i) {
        const std::string domain = kDomains[i].name;
        toolforge::VirtualTool t;
        t.id = t.name = "search_" + domain;
        t.domain = domain;
        t.description = "Searches " + domain + " sources and returns passages about " + kDomains[i].topics + ".";
        t.parameters.push_back({"query", ParamKind::string, "Keywords or a question describing the " + domain + " information needed.",
                                true, ParamRole::query});
        switch (i % 4) {
        case 0: t.parameters.push_back({"limit", ParamKind::integer, "Maximum number of passages to return.", false, ParamRole::other}); break;
        case 1: t.parameters.push_back({"language", ParamKind::string, "Language of the returned passages.", true, ParamRole::other}); break;
        case 2: t.parameters.push_back({"regions", ParamKind::string_list, "Regions to restrict the search to.", false, ParamRole::other}); break;
        default: t.parameters.push_back({"recent_only", ParamKind::boolean, "Only return recently updated passages.", false, ParamRole::other}); break;
        }
        out.push_back(std::move(t));
    }
    return out;
}

class NameMaker {
public:
    explicit NameMaker(std::uint64_t seed) : rng_(seed) {}

    std::string word(std::size_t syllables)
    {
        static const std::array<const char*, 24> parts = {"ka", "lor", "ven", "mi", "ra", "tho", "del", "sa", "bri", "on",
                                                          "tal", "mer", "qui", "zen", "do", "ar", "vel", "nis", "cor", "ul",
                                                          "fen", "gar", "ies", "mont"};
        std::string w;
        for (std::size_t i = 0; i < syllables; ++i) w += parts[rng_.below(parts.size())];
        w[0] = static_cast<char>(w[0] - 'a' + 'A');
        return w;
    }

    /// A name not handed out before.
    std::string unique(std::size_t words, std::size_t syllables)
    {
        for (;;) {
            std::string n;
            for (std::size_t i = 0; i < words; ++i) n += (i ? " " : "") + word(syllables + rng_.below(2));
            if (used_.insert(n).second) return n;
        }
    }

    std::size_t year() { return 1800 + rng_.below(220); }
    std::size_t below(std::size_t n) { return rng_.below(n); }

private:
    Rng rng_;
    std::set<std::string> used_;
};

struct Passage {
    std::string title;
    std::string text;
};

struct Fact {
    std::string question;
    std::string answer;
    std::vector<Passage> passages;
};

/// One seed fact from a randomly chosen template.
inline Fact make_fact(NameMaker& n)
{
    static const std::array<const char*, 6> genres = {"drama", "comedy", "documentary", "thriller", "musical", "western"};
    switch (n.below(5)) {
    case 0: {
        const auto film = "The " + n.unique(1, 3);
        const auto person = n.unique(2, 2);
        const auto city = n.unique(1, 3);
        return {"Where was the director of the film " + film + " born?", city,
                {{film, film + " is a " + std::to_string(n.year()) + " " + genres[n.below(genres.size())]
                            + " film directed by " + person + ". The film premiered at the " + n.unique(1, 2) + " festival."},
                 {person, person + " is a film director born in " + city + " in " + std::to_string(n.year())
                              + ". " + person + " studied cinema at the " + n.unique(1, 2) + " academy."}}};
    }
    case 1: {
        const auto book = n.unique(2, 2);
        const auto author = n.unique(2, 2);
        const auto uni = "University of " + n.unique(1, 3);
        return {"Which university did the author of the novel " + book + " attend?", uni,
                {{book, book + " is a novel written by " + author + " and published in " + std::to_string(n.year()) + "."},
                 {author, author + " is a novelist who attended the " + uni + ". " + author + " later taught literature there."}}};
    }
    case 2: {
        const auto a = n.unique(1, 3) + " FC";
        const auto b = n.unique(1, 3) + " FC";
        const auto ya = n.year();
        auto yb = n.year();
        if (yb == ya) ++yb;
        return {"Which club was founded first, " + a + " or " + b + "?", ya < yb ? a : b,
                {{a, a + " is a football club founded in " + std::to_string(ya) + ". Its home ground is " + n.unique(1, 2) + " Park."},
                 {b, b + " is a football club founded in " + std::to_string(yb) + ". Its home ground is " + n.unique(1, 2) + " Park."}}};
    }
    case 3: {
        const auto opera = n.unique(1, 3);
        const auto composer = n.unique(2, 2);
        const auto city = n.unique(1, 3);
        const auto country = n.unique(1, 3) + "ia";
        return {"In which country is the city where the composer of the opera " + opera + " was born?", country,
                {{opera, opera + " is an opera composed by " + composer + " in " + std::to_string(n.year()) + "."},
                 {composer, composer + " was a composer born in the city of " + city + "."},
                 {city, city + " is a city in " + country + " on the " + n.unique(1, 2) + " river."}}};
    }
    default: {
        const auto company = n.unique(1, 3) + " Industries";
        const auto founder = n.unique(2, 2);
        const auto city = n.unique(1, 3);
        return {"In which city was the founder of " + company + " born?", city,
                {{company, company + " is a manufacturing company founded by " + founder + " in " + std::to_string(n.year()) + "."},
                 {founder, founder + " is an industrialist born in " + city + ". " + founder + " founded several firms."}}};
    }
    }
}

struct World {
    std::vector<toolforge::SeedTriple> seeds;
    std::vector<toolforge::Document> corpus;
    std::vector<toolforge::VirtualTool> tools;
};

/// `seed_count` seeds plus a distractor corpus built from `corpus_facts` further facts.
inline World make_world(std::size_t seed_count, std::size_t corpus_facts = 120, std::uint64_t seed = 7)
{
    World w;
    w.tools = base_tools();
    NameMaker names(seed);
    for (std::size_t i = 0; i < seed_count; ++i) {
        auto f = make_fact(names);
        toolforge::SeedTriple s;
        s.id = "q" + std::to_string(i + 1);
        s.question = f.question;
        s.answer = f.answer;
        for (auto& p : f.passages) {
            s.golden_context.push_back({toolforge::gold_passage_id(s.id, s.golden_context.size()), p.title, p.text});
        }
        w.seeds.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < corpus_facts; ++i) {
        auto f = make_fact(names);
        for (auto& p : f.passages) {
            w.corpus.push_back({"doc" + std::to_string(w.corpus.size() + 1), p.title, p.text});
        }
    }
    return w;
}

} // namespace demo
