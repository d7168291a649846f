"""Claude Buddy Test Suite."""