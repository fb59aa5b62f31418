//! Synthetic "frugal twin" of the dye experiment and campaign harnesses.

mod campaign;
mod oracle;

pub use campaign::{
    campaign_csv, compare_campaigns, run_collaborative_campaign, run_collaborative_campaign_in,
    run_solo_campaign, run_solo_campaign_in, summary_table, CampaignComparison, CampaignConfig,
    CampaignError, CampaignResult, CampaignStep, Policy, CAMPAIGN_CSV_HEADER,
};
pub use oracle::{error, simulate_color, DyeProfile, Oracle, OracleConfig, OracleError};
