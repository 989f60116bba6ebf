#include "aw/sloc.hpp"

namespace aw {

int countSlocL(const Node& node) {
    int count = 0;
    node.walk([&count](const Node& n) {
        switch (n.kind) {
        case NodeKind::FunctionDef:
        case NodeKind::Directive:
        case NodeKind::Pragma:
        case NodeKind::For:
        case NodeKind::While:
        case NodeKind::Do:
        case NodeKind::If:
        case NodeKind::Switch:
        case NodeKind::Return:
        case NodeKind::Label:
            ++count;
            break;
        case NodeKind::Decl:
            if (n.role != Role::Init)
                ++count;
            break;
        case NodeKind::ExprStmt:
            if (n.firstToken() && n.firstToken()->text != ";")
                ++count;
            break;
        default:
            break;
        }
    });
    return count;
}

int countSlocL(const SourceUnit& unit) { return countSlocL(*unit.root); }

int countFunctions(const SourceUnit& unit) { return static_cast<int>(unit.functions().size()); }

} // namespace aw
