#pragma once

#include <stdexcept>
#include <string>

namespace toolforge {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TOOLFORGE_DEFINE_ERROR(Name)                                                               \
    class Name : public Error {                                                                    \
    public:                                                                                        \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}                       \
    }

// llm_backend
TOOLFORGE_DEFINE_ERROR(TransportError);
TOOLFORGE_DEFINE_ERROR(ScriptMiss);
TOOLFORGE_DEFINE_ERROR(BadRequest);

// corpus_retrieval
TOOLFORGE_DEFINE_ERROR(EmptyCorpus);
TOOLFORGE_DEFINE_ERROR(DuplicateDocId);
TOOLFORGE_DEFINE_ERROR(IndexOutOfRange);
TOOLFORGE_DEFINE_ERROR(InvalidDocument);

// tool_space / pattern_catalog
TOOLFORGE_DEFINE_ERROR(ParseError);
TOOLFORGE_DEFINE_ERROR(InvalidTool);
TOOLFORGE_DEFINE_ERROR(InvalidPattern);
TOOLFORGE_DEFINE_ERROR(EmptyCandidateSet);

// dialogue_generator
TOOLFORGE_DEFINE_ERROR(InvalidSeed);
TOOLFORGE_DEFINE_ERROR(PlanParseError);
TOOLFORGE_DEFINE_ERROR(StructureMismatch);
TOOLFORGE_DEFINE_ERROR(DialogueParseError);
TOOLFORGE_DEFINE_ERROR(AssemblyError);

// validation
TOOLFORGE_DEFINE_ERROR(JudgeParseError);

// benchmark_miner
TOOLFORGE_DEFINE_ERROR(NoQualifyingNegative);
TOOLFORGE_DEFINE_ERROR(InsufficientPositives);
TOOLFORGE_DEFINE_ERROR(MissingVerdict);

// pipeline_cli
TOOLFORGE_DEFINE_ERROR(ConfigError);
TOOLFORGE_DEFINE_ERROR(IoError);

#undef TOOLFORGE_DEFINE_ERROR

} // namespace toolforge
