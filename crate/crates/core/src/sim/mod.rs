pub struct ScenarioConfig;
pub struct RunSummary;
